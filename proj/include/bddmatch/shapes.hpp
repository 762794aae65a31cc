#pragma once

#include "mesh.hpp"

#include <map>
#include <numbers>
#include <random>

// Closed primitive meshes for fixtures, demos and tests.
namespace bddmatch::shapes {

    // Flips faces whose normal points towards the origin; valid for star-shaped meshes around it.
    inline std::vector<face> orient_outward(const std::vector<vec3>& v, std::vector<face> faces)
    {
        for(face& f : faces) {
            const vec3 n = detail::cross(detail::sub(v[f[1]], v[f[0]]), detail::sub(v[f[2]], v[f[0]]));
            const vec3 c{(v[f[0]][0] + v[f[1]][0] + v[f[2]][0]) / 3.0, (v[f[0]][1] + v[f[1]][1] + v[f[2]][1]) / 3.0,
                         (v[f[0]][2] + v[f[1]][2] + v[f[2]][2]) / 3.0};
            if(detail::dot3(n, c) < 0.0) std::swap(f[1], f[2]);
        }
        return faces;
    }

    inline mesh tetrahedron()
    {
        std::vector<vec3> v{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
        std::vector<face> f{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
        return {v, orient_outward(v, f)};
    }

    inline mesh octahedron()
    {
        std::vector<vec3> v{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        std::vector<face> f;
        for(std::uint32_t x : {0u, 1u})
            for(std::uint32_t y : {2u, 3u})
                for(std::uint32_t z : {4u, 5u})
                    f.push_back({x, y, z});
        return {v, orient_outward(v, f)};
    }

    inline mesh icosahedron()
    {
        const double t = (1.0 + std::sqrt(5.0)) / 2.0;
        std::vector<vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                            {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
        for(vec3& p : v) {
            const double n = detail::norm(p);
            for(double& c : p) c /= n;
        }
        std::vector<face> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                            {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                            {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
        return {v, orient_outward(v, f)};
    }

    // Midpoint subdivision of the icosahedron projected to the unit sphere; 20 * 4^level faces.
    // Vertices of coarser levels keep their indices.
    inline mesh icosphere(int level)
    {
        mesh m = icosahedron();
        std::vector<vec3> v = m.vertices();
        std::vector<face> f = m.triangles();
        for(int s = 0; s < level; ++s) {
            std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
            auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
                const auto key = std::minmax(a, b);
                auto it = mid.find(key);
                if(it != mid.end()) return it->second;
                vec3 p{(v[a][0] + v[b][0]) / 2, (v[a][1] + v[b][1]) / 2, (v[a][2] + v[b][2]) / 2};
                const double n = detail::norm(p);
                for(double& c : p) c /= n;
                v.push_back(p);
                const auto id = static_cast<std::uint32_t>(v.size() - 1);
                mid.emplace(key, id);
                return id;
            };
            std::vector<face> next;
            for(const face& t : f) {
                const std::uint32_t a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
                next.push_back({t[0], a, c});
                next.push_back({t[1], b, a});
                next.push_back({t[2], c, b});
                next.push_back({a, b, c});
            }
            f = std::move(next);
        }
        return {v, f};
    }

    // Latitude/longitude sphere: `rings` latitude bands, `segments` around; 2 * segments * (rings - 1) faces.
    inline mesh uv_sphere(int rings, int segments)
    {
        std::vector<vec3> v{{0, 0, 1}};
        for(int r = 1; r < rings; ++r) {
            const double theta = std::numbers::pi * r / rings;
            for(int s = 0; s < segments; ++s) {
                const double phi = 2.0 * std::numbers::pi * s / segments;
                v.push_back({std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)});
            }
        }
        v.push_back({0, 0, -1});
        const auto south = static_cast<std::uint32_t>(v.size() - 1);
        auto at = [&](int r, int s) { return static_cast<std::uint32_t>(1 + (r - 1) * segments + (s % segments)); };
        std::vector<face> f;
        for(int s = 0; s < segments; ++s)
            f.push_back({0, at(1, s), at(1, s + 1)});
        for(int r = 1; r + 1 < rings; ++r)
            for(int s = 0; s < segments; ++s) {
                f.push_back({at(r, s), at(r + 1, s), at(r + 1, s + 1)});
                f.push_back({at(r, s), at(r + 1, s + 1), at(r, s + 1)});
            }
        for(int s = 0; s < segments; ++s)
            f.push_back({south, at(rings - 1, s + 1), at(rings - 1, s)});
        return {v, orient_outward(v, f)};
    }

    inline mesh torus(int major_segments, int minor_segments, double major_radius = 1.0, double minor_radius = 0.4)
    {
        std::vector<vec3> v;
        for(int i = 0; i < major_segments; ++i) {
            const double u = 2.0 * std::numbers::pi * i / major_segments;
            for(int j = 0; j < minor_segments; ++j) {
                const double w = 2.0 * std::numbers::pi * j / minor_segments;
                const double r = major_radius + minor_radius * std::cos(w);
                v.push_back({r * std::cos(u), r * std::sin(u), minor_radius * std::sin(w)});
            }
        }
        auto at = [&](int i, int j) {
            return static_cast<std::uint32_t>((i % major_segments) * minor_segments + (j % minor_segments));
        };
        std::vector<face> f;
        for(int i = 0; i < major_segments; ++i)
            for(int j = 0; j < minor_segments; ++j) {
                f.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
                f.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
            }
        return {v, f};
    }

    // Random rotation (uniform via quaternion) applied to all vertices.
    inline mesh rotated(const mesh& m, std::mt19937& rng)
    {
        std::normal_distribution<double> n(0.0, 1.0);
        double q[4] = {n(rng), n(rng), n(rng), n(rng)};
        const double len = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        for(double& c : q) c /= len;
        const double w = q[0], x = q[1], y = q[2], z = q[3];
        const double r[3][3] = {{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                                {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                                {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
        std::vector<vec3> v;
        for(const vec3& p : m.vertices())
            v.push_back({r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2], r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2],
                         r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2]});
        return {v, m.triangles()};
    }

    // Radial jitter of every vertex by a factor in [1 - amount, 1 + amount].
    inline mesh jittered(const mesh& m, double amount, std::mt19937& rng)
    {
        std::uniform_real_distribution<double> u(1.0 - amount, 1.0 + amount);
        std::vector<vec3> v = m.vertices();
        for(vec3& p : v) {
            const double s = u(rng);
            for(double& c : p) c *= s;
        }
        return {v, m.triangles()};
    }

}
