"""Motion-robust respiration recovery from IR-UWB radar I/Q data.

Subpackages:

  sim         physics-based scene synthesis and corpus I/O
  pipeline    clutter removal, CFAR localization, windows, augmentation
  model       the two-stream variational recovery network
  biomarkers  rate, cycle timings, tidal volume, flow
  baselines   amplitude/phase/ellipse-arctan references
  harness     metrics, end-to-end experiments, the CLI
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
