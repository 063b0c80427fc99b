from . import dyad, number_entry
