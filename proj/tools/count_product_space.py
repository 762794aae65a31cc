#!/usr/bin/env python3
"""Count product-space elements of two closed triangle meshes.

Reads two ASCII OFF files and prints a JSON object with the total number of
matching elements and the per-kind breakdown. Elements are aligned triples of
vertex pairs; two triples are the same element if one is a cyclic rotation of
the other.
"""

import argparse
import json
import sys


def read_off(path):
    tokens = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or not tokens[0].startswith("OFF"):
        raise ValueError(f"{path}: not an OFF file")
    rest = tokens[0][3:]
    pos = 1
    if rest:
        tokens.insert(1, rest)
    nv, nf = int(tokens[pos]), int(tokens[pos + 1])
    pos += 3 + 3 * nv
    faces = []
    for _ in range(nf):
        k = int(tokens[pos])
        if k != 3:
            raise ValueError(f"{path}: only triangles are supported")
        faces.append(tuple(int(t) for t in tokens[pos + 1:pos + 4]))
        pos += 4
    return nv, faces


def extended(nv, faces):
    out = []
    for f in faces:
        for r in range(3):
            out.append(((f[r], f[(r + 1) % 3], f[(r + 2) % 3]), "tri"))
    edges = {tuple(sorted((f[k], f[(k + 1) % 3]))) for f in faces for k in range(3)}
    for p, q in sorted(edges):
        for mask in range(1, 7):
            out.append((tuple(q if mask >> b & 1 else p for b in range(3)), "edge"))
    for v in range(nv):
        out.append(((v, v, v), "vertex"))
    return out


def count(mesh_a, mesh_b):
    ea, eb = extended(*mesh_a), extended(*mesh_b)
    kinds = {("tri", "tri"): "tri_tri", ("tri", "edge"): "tri_edge", ("tri", "vertex"): "tri_vertex",
             ("edge", "tri"): "edge_tri", ("vertex", "tri"): "vertex_tri"}
    seen = {name: set() for name in kinds.values()}
    for ta, ca in ea:
        for tb, cb in eb:
            name = kinds.get((ca, cb))
            if name is None:
                continue
            pairs = list(zip(ta, tb))
            seen[name].add(min(tuple(pairs[r:] + pairs[:r]) for r in range(3)))
    result = {name: len(s) for name, s in seen.items()}
    result["total"] = sum(result.values())
    return result


def main(argv):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("mesh_a")
    ap.add_argument("mesh_b")
    args = ap.parse_args(argv)
    print(json.dumps(count(read_off(args.mesh_a), read_off(args.mesh_b)), sort_keys=True))


if __name__ == "__main__":
    main(sys.argv[1:])
