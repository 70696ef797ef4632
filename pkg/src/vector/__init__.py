# Vector Output Package