"""Moment dynamics of fermionic channels, generators and instruments."""
from .channel import ChannelSpec, dual_action_even, dual_action_general, transfer_matrix
from .errors import FermiCloseError
from .multiindex import MonomialKey, basis_dimension, basis_keys

__all__ = [
    "ChannelSpec",
    "FermiCloseError",
    "MonomialKey",
    "basis_dimension",
    "basis_keys",
    "dual_action_general",
    "dual_action_even",
    "transfer_matrix",
]
