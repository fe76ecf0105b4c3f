"""CNN training worker for speech-command recognition, driven over stdio."""

__version__ = "0.1.0"
