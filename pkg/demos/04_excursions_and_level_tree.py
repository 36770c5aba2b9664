#!/usr/bin/env python3
"""Excursions away from the level set at 1 and the subordinated level tree.

The decoration's visits to level 1 cut the tree into excursion chunks;
each chunk knows Z (first returns to 1 off its marked segment) and
n = Z + 1{mark at level 1}.  Concatenating chunk streams in depth-first
local-time order yields a point process whose exploration functional
F = sum(n - 1) first hits -1 exactly at the last atom, and the (time, n)
stream with n != 1 rebuilds the level tree.
"""
import numpy as np

from ssmt.builder import build_tree
from ssmt.excursions import (
    build_excursion_process,
    build_level_tree,
    decompose_excursions,
    encoding_atoms,
    reconstruct_level_tree,
)
from ssmt.harness import canonical_bv_quadruplet
from ssmt.levy import BV

quad = canonical_bv_quadruplet()

for seed in (4, 11, 23, 37):
    tree = build_tree(quad, 1.0, 1e-3, BV, None, seed=seed)
    dec = decompose_excursions(tree)
    if not dec.members:
        continue
    chunks = [ch for m in dec.members.values() for ch in m.chunks]
    proc = build_excursion_process(tree, dec)
    ltree = build_level_tree(tree, dec)
    rebuilt = reconstruct_level_tree(encoding_atoms(proc))
    print(f"seed {seed}: {len(tree.nodes)} individuals, "
          f"{dec.count} meet level 1, {len(chunks)} excursion chunks")
    print(f"  sum(n - 1) = {sum(ch.n_count - 1 for ch in chunks)}   (always -1)")
    print(f"  L(1, T) = {dec.total_local_time():.4f} = level tree length "
          f"{ltree.total_length:.4f}")
    print(f"  F path: {list(proc.f_values)} ; phi = {proc.phi:.4f} "
          f"(last atom {proc.atoms[-1][0]:.4f})")
    same = rebuilt.signature() == ltree.signature()
    print(f"  reconstruction isomorphic to direct construction: {same}")
    print(f"  edge lengths: {sorted(round(e, 4) for e in ltree.edge_lengths())}")
    print()
