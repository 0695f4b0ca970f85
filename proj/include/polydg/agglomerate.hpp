#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <queue>
#include <vector>

#include "mesh.hpp"

namespace polydg {

/// Face-adjacency graph of the elements of one subdomain, in local indices.
template <int Dim>
std::vector<std::vector<std::size_t>> element_graph(const PolyMesh<Dim>& mesh, Subdomain s)
{
    const auto& list = mesh.elements_of(s);
    std::vector<std::vector<std::size_t>> adj(list.size());
    for (const auto& F : mesh.faces) {
        if (!is_internal(F.kind) || face_subdomain(F.kind) != s)
            continue;
        const auto a = mesh.local_index[F.owners[0]], b = mesh.local_index[F.owners[1]];
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& nb : adj) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    return adj;
}

/// Connected components of the subgraph induced by `label == part`; returns a
/// component id per vertex (only meaningful for vertices of that part).
inline std::vector<std::size_t> split_components(const std::vector<std::vector<std::size_t>>& adj,
                                                 std::vector<std::size_t> label)
{
    const std::size_t n = adj.size();
    std::vector<std::size_t> out(n, npos);
    std::size_t next = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (out[v] != npos)
            continue;
        out[v] = next;
        std::deque<std::size_t> q{v};
        while (!q.empty()) {
            const auto a = q.front();
            q.pop_front();
            for (auto b : adj[a])
                if (out[b] == npos && label[b] == label[v]) {
                    out[b] = next;
                    q.push_back(b);
                }
        }
        ++next;
    }
    return out;
}

namespace detail {
inline std::vector<std::size_t> multi_source_bfs(const std::vector<std::vector<std::size_t>>& adj,
                                                 const std::vector<std::size_t>& sources)
{
    std::vector<std::size_t> dist(adj.size(), npos);
    std::deque<std::size_t> q;
    for (auto s : sources) {
        dist[s] = 0;
        q.push_back(s);
    }
    while (!q.empty()) {
        const auto a = q.front();
        q.pop_front();
        for (auto b : adj[a])
            if (dist[b] == npos) {
                dist[b] = dist[a] + 1;
                q.push_back(b);
            }
    }
    return dist;
}
} // namespace detail

/// Partition a graph into connected parts: farthest-point seeds, then greedy
/// region growing where the currently smallest part takes the next vertex of
/// its BFS frontier. Parts are renumbered by their smallest vertex.
inline std::vector<std::size_t> partition_graph(const std::vector<std::vector<std::size_t>>& adj, std::size_t n_parts)
{
    const std::size_t n = adj.size();
    if (n_parts == 0 || n_parts > n)
        throw std::invalid_argument("partition_graph: need 1 <= n_parts <= vertex count");

    std::vector<std::size_t> seeds;
    {
        // First seed: farthest vertex from vertex 0 (unreached counts as farthest).
        auto d = detail::multi_source_bfs(adj, {0});
        seeds.push_back(static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin()));
        while (seeds.size() < n_parts) {
            d = detail::multi_source_bfs(adj, seeds);
            seeds.push_back(static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin()));
        }
    }

    std::vector<std::size_t> part(n, npos), size(n_parts, 1);
    std::vector<std::deque<std::size_t>> frontier(n_parts);
    using Entry = std::pair<std::size_t, std::size_t>; // (size, part)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    for (std::size_t p = 0; p < n_parts; ++p) {
        part[seeds[p]] = p;
        frontier[p].push_back(seeds[p]);
        pq.emplace(1, p);
    }
    while (!pq.empty()) {
        const auto [sz, p] = pq.top();
        pq.pop();
        bool grown = false;
        while (!frontier[p].empty() && !grown) {
            const auto a = frontier[p].front();
            for (auto b : adj[a])
                if (part[b] == npos) {
                    part[b] = p;
                    ++size[p];
                    frontier[p].push_back(b);
                    grown = true;
                    break;
                }
            if (!grown)
                frontier[p].pop_front();
        }
        if (grown)
            pq.emplace(size[p], p);
    }
    // Components without a seed become extra parts.
    std::size_t extra = n_parts;
    for (std::size_t v = 0; v < n; ++v)
        if (part[v] == npos) {
            std::deque<std::size_t> q{v};
            part[v] = extra;
            while (!q.empty()) {
                const auto a = q.front();
                q.pop_front();
                for (auto b : adj[a])
                    if (part[b] == npos) {
                        part[b] = extra;
                        q.push_back(b);
                    }
            }
            ++extra;
        }

    // Post-split disconnected parts, then renumber by first vertex.
    const auto comp = split_components(adj, part);
    std::map<std::size_t, std::size_t> renumber;
    std::vector<std::size_t> out(n);
    for (std::size_t v = 0; v < n; ++v) {
        auto [it, inserted] = renumber.try_emplace(comp[v], renumber.size());
        out[v] = it->second;
    }
    return out;
}

/// Merge the elements of each subdomain into connected agglomerates.
/// Requests larger than a subdomain's element count are rejected; the
/// delivered count may exceed the request when a part had to be split.
template <int Dim>
PolyMesh<Dim> agglomerate(const PolyMesh<Dim>& mesh, std::size_t n_parts_per_subdomain)
{
    std::vector<std::size_t> new_id(mesh.elements.size(), npos);
    std::vector<Subdomain> new_subdomain;
    for (auto s : {Subdomain::el, Subdomain::f}) {
        const auto& list = mesh.elements_of(s);
        if (list.empty())
            continue;
        if (n_parts_per_subdomain > list.size())
            throw std::invalid_argument("agglomerate: n_parts exceeds element count of subdomain " +
                                        std::string(to_string(s)));
        const auto part = partition_graph(element_graph(mesh, s), n_parts_per_subdomain);
        const std::size_t base = new_subdomain.size();
        const std::size_t count = *std::max_element(part.begin(), part.end()) + 1;
        new_subdomain.insert(new_subdomain.end(), count, s);
        for (std::size_t i = 0; i < list.size(); ++i)
            new_id[list[i]] = base + part[i];
    }
    // Keep the original relative order of agglomerates: sort by first fine element.
    std::vector<std::size_t> first(new_subdomain.size(), npos);
    for (std::size_t e = 0; e < mesh.elements.size(); ++e)
        first[new_id[e]] = std::min(first[new_id[e]], e);
    std::vector<std::size_t> order(first.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return first[a] < first[b]; });
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        rank[order[i]] = i;

    SimplexSoup<Dim> soup;
    soup.vertices = mesh.vertices;
    soup.element_subdomain.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        soup.element_subdomain[i] = new_subdomain[order[i]];
    for (std::size_t e = 0; e < mesh.elements.size(); ++e)
        for (const auto& s : mesh.elements[e].simplices) {
            soup.simplices.push_back(s);
            soup.simplex_element.push_back(rank[new_id[e]]);
        }
    std::map<Facet<Dim>, FaceTag> tags;
    for (const auto& F : mesh.faces)
        tags[detail::sorted<Dim>(F.vertices)] = {F.kind, F.marker};
    soup.inherited = &tags;
    return build_from_simplices(soup);
}

} // namespace polydg
