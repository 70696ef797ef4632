# Synthetic Scenes Package