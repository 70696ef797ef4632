# Pipeline Orchestration Package