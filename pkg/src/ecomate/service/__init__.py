"""EcoMate chat service: REST API, persistence, and static UI hosting."""
