"""Energy-margin robustness metrics for planar manipulation.

Quantifies how firmly a manipulation policy holds an object by measuring
the external work needed to defeat it: capture scores integrate a softmax
likelihood over sampled energy-cost fields, and escape effort lower-bounds
the work an adversary must inject, both computed with kinodynamic
sampling-based planners over a deterministic 2D contact simulator.
"""

from __future__ import annotations

__version__ = "0.1.0"
