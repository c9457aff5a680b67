"""Energy-aware RF-chain and antenna selection for LDPC-connected hybrid beamforming receivers."""

__version__ = "0.1.0"
