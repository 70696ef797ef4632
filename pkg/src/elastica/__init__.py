# Elastica Inpainting Package