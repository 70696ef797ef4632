# Raster Input Package