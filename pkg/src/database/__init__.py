# Run Ledger Package