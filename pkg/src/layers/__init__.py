# Shape Layer Package