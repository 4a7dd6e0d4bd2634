"""morphoplast: grow recurrent controllers from compact genomes and study
online Hebbian/anti-Hebbian plasticity on classic-control tasks."""

__version__ = "0.1.0"
