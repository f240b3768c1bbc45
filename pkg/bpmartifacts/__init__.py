# -*- coding: utf-8 -*-
"""BPm Artifact Detection (bpmArtifacts).

bpmArtifacts is a Python module that labels artifactual samples in
minute-resolution mean blood pressure (BPm) recordings by combining a
statistical flatline detector with a reconstruction error spike detector.
"""

__version__ = '20261018'
