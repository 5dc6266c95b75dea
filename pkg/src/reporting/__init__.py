# Reporting modules for experiment artifacts
