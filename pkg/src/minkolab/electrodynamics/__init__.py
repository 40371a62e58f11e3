"""Retarded-only two-body electrodynamics on sampled worldlines."""

from .fields import (Particle, advanced_field, electric_part, fokker_force, lorentz_force,
                     magnetic_part, regularized_field_oracle, retarded_field, retarded_force)

__all__ = ["Particle", "advanced_field", "electric_part", "fokker_force", "lorentz_force",
           "magnetic_part", "regularized_field_oracle", "retarded_field", "retarded_force"]
