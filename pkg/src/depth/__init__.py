# Depth Ordering Package