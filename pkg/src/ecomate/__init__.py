"""Smart-home routine generation platform.

Benchmarks pluggable chat-completion models on HomeAssistant automation
generation, validates automations offline against a strict schema, and backs
the EcoMate chat service for sustainable routine creation.
"""

__version__ = "0.1.0"
