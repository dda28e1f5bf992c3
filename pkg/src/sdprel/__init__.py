"""Relation classification over shortest dependency paths.

A small convolutional network reads the encoded dependency path between two
nominals and predicts their relation; reversed-path negative sampling teaches
it the subject/object direction.
"""

__version__ = "0.1.0"
