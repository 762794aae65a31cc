#pragma once

#include "ilp.hpp"
#include "mesh.hpp"

#include <functional>
#include <set>

namespace bddmatch {

    enum class product_kind : std::uint8_t { tri_tri, tri_edge, tri_vertex, edge_tri, vertex_tri };

    inline const char* to_string(product_kind k)
    {
        switch(k) {
            case product_kind::tri_tri: return "tri-tri";
            case product_kind::tri_edge: return "tri-edge";
            case product_kind::tri_vertex: return "tri-vertex";
            case product_kind::edge_tri: return "edge-tri";
            case product_kind::vertex_tri: return "vertex-tri";
        }
        return "?";
    }

    // Three aligned vertex pairs (m_k, n_k), stored in the lexicographically
    // smallest of the three simultaneous rotations.
    struct product_triangle {
        std::array<std::uint32_t, 3> m;
        std::array<std::uint32_t, 3> n;
        std::int32_t m_face = -1; // face of M covered, -1 if the M side is degenerate
        std::int32_t n_face = -1;
        product_kind kind;

        std::array<std::pair<std::uint32_t, std::uint32_t>, 3> pairs() const
        {
            return {{{m[0], n[0]}, {m[1], n[1]}, {m[2], n[2]}}};
        }
        auto key() const { return std::tie(m[0], n[0], m[1], n[1], m[2], n[2]); }
    };

    struct product_space {
        std::vector<product_triangle> triangles;
        std::vector<double> costs; // empty until feature_costs is applied

        std::size_t size() const { return triangles.size(); }
    };

    // Allowed vertex pairs; an empty function allows everything.
    using pair_filter = std::function<bool(std::uint32_t, std::uint32_t)>;

    namespace detail {

        struct extended_triple {
            std::array<std::uint32_t, 3> v;
            std::int32_t face = -1;
            bool vertex = false;
        };

        // 3 rotations per oriented face are covered by pairing the stored
        // rotation with every triple of the other side; the degenerate triples
        // are the 6 two-vertex patterns per edge and one triple per vertex.
        inline std::vector<extended_triple> degenerate_triples(const mesh& x)
        {
            std::vector<extended_triple> out;
            for(const auto& e : x.edges()) {
                const std::uint32_t a = e[0], b = e[1];
                for(const auto& t : std::initializer_list<std::array<std::uint32_t, 3>>{
                        {a, a, b}, {a, b, a}, {b, a, a}, {a, b, b}, {b, a, b}, {b, b, a}})
                    out.push_back({t, -1, false});
            }
            for(std::uint32_t v = 0; v < x.nr_vertices(); ++v)
                out.push_back({{v, v, v}, -1, true});
            return out;
        }

        inline std::vector<extended_triple> face_rotations(const mesh& x)
        {
            std::vector<extended_triple> out;
            for(std::size_t f = 0; f < x.nr_triangles(); ++f) {
                const face& t = x.triangles()[f];
                for(int r = 0; r < 3; ++r)
                    out.push_back({{t[r], t[(r + 1) % 3], t[(r + 2) % 3]}, static_cast<std::int32_t>(f), false});
            }
            return out;
        }

        inline product_triangle canonical(std::array<std::uint32_t, 3> m, std::array<std::uint32_t, 3> n, std::int32_t mf,
                                          std::int32_t nf, product_kind k)
        {
            product_triangle best{m, n, mf, nf, k};
            for(int r = 1; r < 3; ++r) {
                product_triangle c{{m[r], m[(r + 1) % 3], m[(r + 2) % 3]}, {n[r], n[(r + 1) % 3], n[(r + 2) % 3]}, mf, nf, k};
                if(c.key() < best.key()) best = c;
            }
            return best;
        }

    }

    // All triangle-triangle, triangle-edge and triangle-vertex elements (both
    // directions) modulo simultaneous rotation, sorted by canonical key.
    inline product_space enumerate_product_triangles(const mesh& a, const mesh& b, const pair_filter& allowed = {})
    {
        product_space ps;
        auto keep = [&](const std::array<std::uint32_t, 3>& m, const std::array<std::uint32_t, 3>& n) {
            if(!allowed) return true;
            for(int k = 0; k < 3; ++k)
                if(!allowed(m[k], n[k])) return false;
            return true;
        };
        const auto rot_b = detail::face_rotations(b);
        const auto deg_a = detail::degenerate_triples(a);
        const auto deg_b = detail::degenerate_triples(b);
        for(std::size_t f = 0; f < a.nr_triangles(); ++f) {
            const face& t = a.triangles()[f];
            const auto mf = static_cast<std::int32_t>(f);
            for(const auto& e : rot_b)
                if(keep(t, e.v)) ps.triangles.push_back(detail::canonical(t, e.v, mf, e.face, product_kind::tri_tri));
            for(const auto& e : deg_b)
                if(keep(t, e.v))
                    ps.triangles.push_back(detail::canonical(t, e.v, mf, -1, e.vertex ? product_kind::tri_vertex : product_kind::tri_edge));
        }
        for(std::size_t f = 0; f < b.nr_triangles(); ++f) {
            const face& t = b.triangles()[f];
            const auto nf = static_cast<std::int32_t>(f);
            for(const auto& e : deg_a)
                if(keep(e.v, t))
                    ps.triangles.push_back(detail::canonical(e.v, t, -1, nf, e.vertex ? product_kind::vertex_tri : product_kind::edge_tri));
        }
        std::sort(ps.triangles.begin(), ps.triangles.end(),
                  [](const product_triangle& x, const product_triangle& y) { return x.key() < y.key(); });
        return ps;
    }

    enum class row_kind : std::uint8_t { boundary, projection_m, projection_n };

    // The shape matching ILP together with the role of each row.
    struct shape_ilp {
        ilp_instance instance;
        std::vector<row_kind> kinds;
        std::size_t nr_boundary = 0;
        std::size_t nr_projection_m = 0;
        std::size_t nr_projection_n = 0;
    };

    // Boundary rows (one per undirected product edge, sum of oriented
    // incidences = 0) followed by one projection row per face of M and of N
    // (each face covered exactly once). Throws pruned_infeasible if a face has no candidate.
    inline shape_ilp assemble_constraints(const product_space& ps, const mesh& a, const mesh& b)
    {
        shape_ilp out;
        std::vector<double> costs = ps.costs.empty() ? std::vector<double>(ps.size(), 0.0) : ps.costs;
        out.instance = ilp_instance(std::move(costs));

        struct incidence {
            std::array<std::uint32_t, 4> edge; // (m, n, m', n') with (m, n) < (m', n')
            std::uint32_t triangle;
            int sign;
            bool operator<(const incidence& o) const { return std::tie(edge, triangle) < std::tie(o.edge, o.triangle); }
        };
        std::vector<incidence> inc;
        inc.reserve(3 * ps.size());
        for(std::size_t p = 0; p < ps.size(); ++p) {
            const auto pr = ps.triangles[p].pairs();
            for(int k = 0; k < 3; ++k) {
                const auto u = pr[k], v = pr[(k + 1) % 3];
                if(u < v) inc.push_back({{u.first, u.second, v.first, v.second}, static_cast<std::uint32_t>(p), +1});
                else inc.push_back({{v.first, v.second, u.first, u.second}, static_cast<std::uint32_t>(p), -1});
            }
        }
        std::sort(inc.begin(), inc.end());
        for(std::size_t s = 0; s < inc.size();) {
            std::size_t e = s;
            linear_row row;
            while(e < inc.size() && inc[e].edge == inc[s].edge) {
                if(!row.variables.empty() && row.variables.back() == inc[e].triangle) {
                    row.coefficients.back() += inc[e].sign;
                } else {
                    row.variables.push_back(inc[e].triangle);
                    row.coefficients.push_back(inc[e].sign);
                }
                ++e;
            }
            s = e;
            // drop cancelled entries
            linear_row clean;
            for(std::size_t k = 0; k < row.variables.size(); ++k)
                if(row.coefficients[k] != 0) { clean.variables.push_back(row.variables[k]); clean.coefficients.push_back(row.coefficients[k]); }
            if(clean.variables.empty()) continue;
            out.instance.add_constraint(clean);
            out.kinds.push_back(row_kind::boundary);
            ++out.nr_boundary;
        }

        auto projection = [&](std::size_t nr_faces, bool side_m, row_kind kind, const char* name) {
            std::vector<linear_row> rows(nr_faces);
            for(std::size_t p = 0; p < ps.size(); ++p) {
                const std::int32_t f = side_m ? ps.triangles[p].m_face : ps.triangles[p].n_face;
                if(f >= 0) {
                    rows[f].variables.push_back(static_cast<var_id>(p));
                    rows[f].coefficients.push_back(1);
                }
            }
            for(std::size_t f = 0; f < nr_faces; ++f) {
                if(rows[f].variables.empty())
                    throw pruned_infeasible(std::string("face ") + std::to_string(f) + " of mesh " + name + " has no candidate matching");
                rows[f].rhs = 1;
                out.instance.add_constraint(rows[f]);
                out.kinds.push_back(kind);
            }
            return nr_faces;
        };
        out.nr_projection_m = projection(a.nr_triangles(), true, row_kind::projection_m, "A");
        out.nr_projection_n = projection(b.nr_triangles(), false, row_kind::projection_n, "B");
        return out;
    }

    using feature_matrix = std::vector<std::vector<double>>;

    // c_p = sum_k (area_M(m_k) + area_N(n_k)) * ||F_M(m_k) - F_N(n_k)||
    inline std::vector<double> feature_costs(const product_space& ps, const feature_matrix& fa, const feature_matrix& fb,
                                             std::span<const double> area_a, std::span<const double> area_b)
    {
        if(fa.empty() || fb.empty())
            throw feature_dimension_mismatch("feature matrices must not be empty");
        const std::size_t dim = fa[0].size();
        for(const auto& row : fa)
            if(row.size() != dim) throw feature_dimension_mismatch("ragged feature matrix for mesh A");
        for(const auto& row : fb)
            if(row.size() != dim)
                throw feature_dimension_mismatch("feature dimension " + std::to_string(row.size()) + " of mesh B differs from " +
                                                 std::to_string(dim) + " of mesh A");
        if(fa.size() != area_a.size() || fb.size() != area_b.size())
            throw feature_dimension_mismatch("feature rows do not match vertex counts");
        std::vector<double> c(ps.size(), 0.0);
        for(std::size_t p = 0; p < ps.size(); ++p) {
            const product_triangle& t = ps.triangles[p];
            double sum = 0.0;
            for(int k = 0; k < 3; ++k) {
                const auto& x = fa[t.m[k]];
                const auto& y = fb[t.n[k]];
                double d2 = 0.0;
                for(std::size_t d = 0; d < dim; ++d)
                    d2 += (x[d] - y[d]) * (x[d] - y[d]);
                sum += (area_a[t.m[k]] + area_b[t.n[k]]) * std::sqrt(d2);
            }
            c[p] = sum;
        }
        return c;
    }

    struct violated_row {
        std::size_t row;
        row_kind kind;
        long long lhs;
        long long rhs;
    };

    struct verification_report {
        std::vector<violated_row> violations;
        bool ok() const { return violations.empty(); }
    };

    // Exact integer check of every row.
    inline verification_report verify_solution(std::span<const char> x, const shape_ilp& ilp)
    {
        verification_report rep;
        const auto& cons = ilp.instance.constraints();
        for(std::size_t j = 0; j < cons.size(); ++j) {
            const linear_row& row = *cons[j].row;
            long long lhs = 0;
            for(std::size_t k = 0; k < row.variables.size(); ++k)
                if(x[row.variables[k]]) lhs += row.coefficients[k];
            if(lhs != row.rhs)
                rep.violations.push_back({j, ilp.kinds[j], lhs, row.rhs});
        }
        return rep;
    }

    struct matching {
        std::vector<std::size_t> selected;                             // product triangle indices
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;    // sorted, unique
        std::vector<std::int64_t> point_map;                           // per vertex of M, -1 if unmatched
    };

    // Union of the vertex pairs of the selected elements; the point map keeps,
    // per vertex of M, the partner with the smallest feature distance
    // (lowest index on ties, or when no features are given).
    inline matching decode_matching(std::span<const char> x, const product_space& ps, const shape_ilp& ilp, std::size_t nr_vertices_a,
                                    const feature_matrix* fa = nullptr, const feature_matrix* fb = nullptr)
    {
        const auto rep = verify_solution(x, ilp);
        if(!rep.ok())
            throw infeasible_input("assignment violates " + std::to_string(rep.violations.size()) + " constraint rows");
        matching out;
        std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
        for(std::size_t p = 0; p < ps.size(); ++p) {
            if(!x[p]) continue;
            out.selected.push_back(p);
            for(const auto& pr : ps.triangles[p].pairs())
                pairs.insert(pr);
        }
        out.pairs.assign(pairs.begin(), pairs.end());
        out.point_map.assign(nr_vertices_a, -1);
        std::vector<double> best(nr_vertices_a, std::numeric_limits<double>::infinity());
        for(const auto& [m, n] : out.pairs) {
            double d = 0.0;
            if(fa && fb) {
                const auto& u = (*fa)[m];
                const auto& v = (*fb)[n];
                for(std::size_t k = 0; k < u.size(); ++k)
                    d += (u[k] - v[k]) * (u[k] - v[k]);
            }
            if(d < best[m]) {
                best[m] = d;
                out.point_map[m] = n;
            }
        }
        return out;
    }

    // Product space, costs and constraints for a mesh pair in one go.
    struct shape_problem {
        product_space space;
        shape_ilp ilp;
    };

    inline shape_problem build_shape_problem(const mesh& a, const mesh& b, const feature_matrix& fa, const feature_matrix& fb,
                                             const pair_filter& allowed = {})
    {
        validate_mesh_pair(a, b);
        if(fa.size() != a.nr_vertices())
            throw feature_dimension_mismatch("mesh A has " + std::to_string(a.nr_vertices()) + " vertices but " +
                                             std::to_string(fa.size()) + " feature rows");
        if(fb.size() != b.nr_vertices())
            throw feature_dimension_mismatch("mesh B has " + std::to_string(b.nr_vertices()) + " vertices but " +
                                             std::to_string(fb.size()) + " feature rows");
        shape_problem sp;
        sp.space = enumerate_product_triangles(a, b, allowed);
        sp.space.costs = feature_costs(sp.space, fa, fb, mixed_vertex_areas(a), mixed_vertex_areas(b));
        sp.ilp = assemble_constraints(sp.space, a, b);
        return sp;
    }

}
