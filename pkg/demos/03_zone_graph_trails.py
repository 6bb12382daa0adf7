"""Zone graph construction and its trail decomposition.

Scatter zone centroids, connect them with the symmetric 4-NN rule, then
cut the edge set into non-overlapping trails (pairing odd-degree
vertices with pseudoedges and splitting the Eulerian circuit).  The
trails are the chains on which the denoiser's 1-D subproblems run.
"""
import numpy as np

from zonefuse import decompose_trails, dump_trails, knn_graph

rng = np.random.default_rng(4)
centroids = {f"z{i:02d}": (float(x), float(y))
             for i, (x, y) in enumerate(rng.uniform(0, 10, size=(14, 2)))}

graph = knn_graph(centroids, k=4)
deg = graph.degrees()
print(f"{graph.n_nodes} zones, {graph.n_edges} edges "
      f"(degrees {deg.min()}..{deg.max()})")
odd = [graph.nodes[i] for i in range(graph.n_nodes) if deg[i] % 2]
print(f"odd-degree zones: {odd}")

decomposition = decompose_trails(graph)
print(f"\n{len(decomposition.trails)} trails "
      f"(pseudoedges per component: {decomposition.pseudoedge_counts})")
print(dump_trails(graph, decomposition))

covered = sum(len(t) - 1 for t in decomposition.trails)
print(f"edges covered by trails: {covered} == graph edges: {graph.n_edges}")
