# Vectorizer Test Package