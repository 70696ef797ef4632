# Layered Vectorizer Package