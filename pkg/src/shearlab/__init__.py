"""shearlab: a verification workbench for quantifier-free type orbits over
finite ordered index structures, shearing and dividing instances against the
random graph and generic clique-free hypergraphs, unsuperstability
certificates, and the circle property with constructive translations in both
directions."""

__version__ = "0.1.0"
