#pragma once

#include "error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace bddmatch {

    using vec3 = std::array<double, 3>;
    using face = std::array<std::uint32_t, 3>;

    namespace detail {
        inline vec3 sub(const vec3& a, const vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
        inline double dot3(const vec3& a, const vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
        inline vec3 cross(const vec3& a, const vec3& b)
        {
            return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
        }
        inline double norm(const vec3& a) { return std::sqrt(dot3(a, a)); }
    }

    // Closed, oriented triangle mesh with counterclockwise faces.
    class mesh {
        public:
            mesh() = default;
            mesh(std::vector<vec3> vertices, std::vector<face> triangles)
                : vertices_(std::move(vertices)), triangles_(std::move(triangles))
            {
                build_topology();
            }

            std::size_t nr_vertices() const { return vertices_.size(); }
            std::size_t nr_triangles() const { return triangles_.size(); }
            std::size_t nr_edges() const { return edges_.size(); }

            const std::vector<vec3>& vertices() const { return vertices_; }
            const std::vector<face>& triangles() const { return triangles_; }
            // Undirected edges (a < b), sorted.
            const std::vector<std::array<std::uint32_t, 2>>& edges() const { return edges_; }
            // Sorted neighbours of v.
            const std::vector<std::uint32_t>& one_ring(std::uint32_t v) const { return rings_[v]; }

            int euler_characteristic() const
            {
                return static_cast<int>(nr_vertices()) - static_cast<int>(nr_edges()) + static_cast<int>(nr_triangles());
            }
            int genus() const { return (2 - euler_characteristic()) / 2; }

            double triangle_area(std::size_t f) const
            {
                const face& t = triangles_[f];
                return 0.5 * detail::norm(detail::cross(detail::sub(vertices_[t[1]], vertices_[t[0]]),
                                                        detail::sub(vertices_[t[2]], vertices_[t[0]])));
            }

            double surface_area() const
            {
                double a = 0.0;
                for(std::size_t f = 0; f < nr_triangles(); ++f)
                    a += triangle_area(f);
                return a;
            }

            // Vertices within `ring` edges of any seed.
            std::vector<std::uint32_t> neighbourhood(const std::vector<std::uint32_t>& seeds, int ring) const
            {
                std::vector<int> depth(nr_vertices(), -1);
                std::vector<std::uint32_t> frontier;
                for(std::uint32_t s : seeds)
                    if(depth[s] < 0) { depth[s] = 0; frontier.push_back(s); }
                std::vector<std::uint32_t> out = frontier;
                for(int d = 1; d <= ring; ++d) {
                    std::vector<std::uint32_t> next;
                    for(std::uint32_t v : frontier)
                        for(std::uint32_t w : rings_[v])
                            if(depth[w] < 0) { depth[w] = d; next.push_back(w); out.push_back(w); }
                    frontier = std::move(next);
                }
                std::sort(out.begin(), out.end());
                return out;
            }

        private:
            void build_topology()
            {
                rings_.assign(vertices_.size(), {});
                for(const face& t : triangles_) {
                    for(int k = 0; k < 3; ++k) {
                        const std::uint32_t a = t[k], b = t[(k + 1) % 3];
                        if(a >= vertices_.size() || b >= vertices_.size())
                            throw mesh_error("face references vertex " + std::to_string(std::max(a, b)) + " out of range");
                        edges_.push_back({std::min(a, b), std::max(a, b)});
                    }
                }
                std::sort(edges_.begin(), edges_.end());
                edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
                for(const auto& e : edges_) {
                    if(e[0] == e[1]) continue;
                    rings_[e[0]].push_back(e[1]);
                    rings_[e[1]].push_back(e[0]);
                }
                for(auto& r : rings_)
                    std::sort(r.begin(), r.end());
            }

            std::vector<vec3> vertices_;
            std::vector<face> triangles_;
            std::vector<std::array<std::uint32_t, 2>> edges_;
            std::vector<std::vector<std::uint32_t>> rings_;
    };

    // Checks closedness, consistent orientation, edge-manifoldness,
    // non-degenerate faces and connectivity. `name` labels error messages.
    inline void validate_mesh(const mesh& m, const std::string& name = "mesh")
    {
        if(m.nr_triangles() == 0)
            throw mesh_error(name + ": no triangles");
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> directed;
        for(std::size_t f = 0; f < m.nr_triangles(); ++f) {
            const face& t = m.triangles()[f];
            if(t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
                throw degenerate_triangle(name + ": face " + std::to_string(f) + " repeats a vertex");
            if(!(m.triangle_area(f) > 0.0))
                throw degenerate_triangle(name + ": face " + std::to_string(f) + " has zero area");
            for(int k = 0; k < 3; ++k) {
                auto [it, inserted] = directed.try_emplace({t[k], t[(k + 1) % 3]}, f);
                if(!inserted)
                    throw not_manifold(name + ": directed edge (" + std::to_string(t[k]) + "," + std::to_string(t[(k + 1) % 3]) +
                                       ") used by faces " + std::to_string(it->second) + " and " + std::to_string(f) +
                                       " (non-manifold or inconsistently oriented)");
            }
        }
        for(const auto& [e, f] : directed)
            if(!directed.count({e.second, e.first}))
                throw not_closed(name + ": boundary edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
                                 ") has a single incident face " + std::to_string(f));
        // every vertex used, one connected component
        std::vector<std::uint32_t> parent(m.nr_vertices());
        std::iota(parent.begin(), parent.end(), 0u);
        auto find = [&](std::uint32_t v) {
            while(parent[v] != v) v = parent[v] = parent[parent[v]];
            return v;
        };
        std::vector<char> used(m.nr_vertices(), 0);
        for(const face& t : m.triangles())
            for(int k = 0; k < 3; ++k) {
                used[t[k]] = 1;
                parent[find(t[k])] = find(t[(k + 1) % 3]);
            }
        for(std::uint32_t v = 0; v < m.nr_vertices(); ++v) {
            if(!used[v])
                throw not_manifold(name + ": vertex " + std::to_string(v) + " is not used by any face");
            if(find(v) != find(0))
                throw not_manifold(name + ": mesh has more than one connected component");
        }
        if(m.euler_characteristic() % 2 != 0)
            throw not_manifold(name + ": odd Euler characteristic " + std::to_string(m.euler_characteristic()));
    }

    // Both meshes valid and of equal genus; otherwise no discrete diffeomorphism exists.
    inline void validate_mesh_pair(const mesh& a, const mesh& b)
    {
        validate_mesh(a, "mesh A");
        validate_mesh(b, "mesh B");
        if(a.genus() != b.genus())
            throw genus_mismatch("genus mismatch: mesh A has genus " + std::to_string(a.genus()) + ", mesh B has genus " +
                                 std::to_string(b.genus()));
    }

    // Mixed Voronoi areas: cotangent Voronoi area for non-obtuse triangles,
    // otherwise half the triangle area to the obtuse corner and a quarter to the others.
    inline std::vector<double> mixed_vertex_areas(const mesh& m)
    {
        std::vector<double> area(m.nr_vertices(), 0.0);
        for(std::size_t f = 0; f < m.nr_triangles(); ++f) {
            const face& t = m.triangles()[f];
            const double a = m.triangle_area(f);
            if(!(a > 0.0))
                throw degenerate_triangle("face " + std::to_string(f) + " has zero area");
            std::array<vec3, 3> p{m.vertices()[t[0]], m.vertices()[t[1]], m.vertices()[t[2]]};
            // cot of the angle at corner k and whether it is obtuse
            std::array<double, 3> cot{};
            int obtuse = -1;
            for(int k = 0; k < 3; ++k) {
                const vec3 u = detail::sub(p[(k + 1) % 3], p[k]);
                const vec3 v = detail::sub(p[(k + 2) % 3], p[k]);
                const double d = detail::dot3(u, v);
                cot[k] = d / detail::norm(detail::cross(u, v));
                if(d < 0.0) obtuse = k;
            }
            if(obtuse < 0) {
                for(int k = 0; k < 3; ++k) {
                    const int b = (k + 1) % 3, c = (k + 2) % 3;
                    // edge k-c is opposite b, edge k-b is opposite c
                    const vec3 kc = detail::sub(p[c], p[k]);
                    const vec3 kb = detail::sub(p[b], p[k]);
                    area[t[k]] += 0.125 * (detail::dot3(kc, kc) * cot[b] + detail::dot3(kb, kb) * cot[c]);
                }
            } else {
                for(int k = 0; k < 3; ++k)
                    area[t[k]] += k == obtuse ? 0.5 * a : 0.25 * a;
            }
        }
        return area;
    }

}
