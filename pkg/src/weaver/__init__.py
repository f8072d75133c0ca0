"""Weaver: a bidirectional data-story authoring engine.

Chart callouts become ranked, template-rendered data facts that anchor
generated narrative; selected narrative text becomes validated chart
recommendations over the available datasets.
"""

__version__ = "0.1.0"
