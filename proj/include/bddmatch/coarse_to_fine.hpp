#pragma once

#include "product_space.hpp"
#include "solver.hpp"

namespace bddmatch {

    // A mesh plus, for every vertex, the vertex of the next coarser level it projects to.
    // The coarsest level has an empty map.
    struct resolution_level {
        mesh shape;
        std::vector<std::uint32_t> to_coarser;

        void validate(std::size_t nr_coarser_vertices) const
        {
            if(to_coarser.size() != shape.nr_vertices())
                throw error("projection map has " + std::to_string(to_coarser.size()) + " entries for " +
                            std::to_string(shape.nr_vertices()) + " vertices");
            for(std::uint32_t v : to_coarser)
                if(v >= nr_coarser_vertices)
                    throw error("projection map entry " + std::to_string(v) + " exceeds coarse vertex count " +
                                std::to_string(nr_coarser_vertices));
        }
    };

    // Nearest coarse vertex for every fine vertex, lowest index on ties.
    inline std::vector<std::uint32_t> nearest_vertex_map(const mesh& fine, const mesh& coarse)
    {
        std::vector<std::uint32_t> out(fine.nr_vertices());
        for(std::size_t v = 0; v < fine.nr_vertices(); ++v) {
            double best = std::numeric_limits<double>::infinity();
            for(std::size_t u = 0; u < coarse.nr_vertices(); ++u) {
                const vec3 d = detail::sub(fine.vertices()[v], coarse.vertices()[u]);
                const double n = detail::dot3(d, d);
                if(n < best) {
                    best = n;
                    out[v] = static_cast<std::uint32_t>(u);
                }
            }
        }
        return out;
    }

    // Dense membership table of allowed (m, n) vertex pairs.
    class pair_set {
        public:
            pair_set(std::size_t nr_m, std::size_t nr_n, bool value = false) : nr_m_(nr_m), nr_n_(nr_n), bits_(nr_m * nr_n, value) {}

            static pair_set all(std::size_t nr_m, std::size_t nr_n) { return pair_set(nr_m, nr_n, true); }

            bool contains(std::uint32_t m, std::uint32_t n) const { return bits_[std::size_t(m) * nr_n_ + n] != 0; }
            void insert(std::uint32_t m, std::uint32_t n) { bits_[std::size_t(m) * nr_n_ + n] = 1; }
            std::size_t size() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), char(1))); }
            std::size_t nr_m() const { return nr_m_; }
            std::size_t nr_n() const { return nr_n_; }

            pair_filter filter() const
            {
                return [this](std::uint32_t m, std::uint32_t n) { return contains(m, n); };
            }

        private:
            std::size_t nr_m_, nr_n_;
            std::vector<char> bits_;
    };

    namespace detail {
        inline std::vector<std::vector<std::uint32_t>> preimages(const resolution_level& level, std::size_t nr_coarse)
        {
            std::vector<std::vector<std::uint32_t>> out(nr_coarse);
            for(std::size_t v = 0; v < level.to_coarser.size(); ++v)
                out[level.to_coarser[v]].push_back(static_cast<std::uint32_t>(v));
            return out;
        }
    }

    // (m', n') is allowed iff some coarse match (a, b) has m' within `ring` edges
    // of a fine vertex projecting to a, and n' likewise for b.
    inline pair_set allowed_pairs(std::span<const std::pair<std::uint32_t, std::uint32_t>> coarse_matches, const resolution_level& fine_m,
                                  const resolution_level& fine_n, int ring)
    {
        if(coarse_matches.empty())
            throw error("coarse matching is empty");
        std::uint32_t max_a = 0, max_b = 0;
        for(const auto& [a, b] : coarse_matches) {
            max_a = std::max(max_a, a);
            max_b = std::max(max_b, b);
        }
        std::size_t nr_a = max_a + 1, nr_b = max_b + 1;
        for(std::uint32_t v : fine_m.to_coarser) nr_a = std::max<std::size_t>(nr_a, v + 1);
        for(std::uint32_t v : fine_n.to_coarser) nr_b = std::max<std::size_t>(nr_b, v + 1);
        const auto pre_m = detail::preimages(fine_m, nr_a);
        const auto pre_n = detail::preimages(fine_n, nr_b);

        std::vector<std::vector<std::uint32_t>> ring_m(nr_a), ring_n(nr_b);
        std::vector<char> done_m(nr_a, 0), done_n(nr_b, 0);
        pair_set out(fine_m.shape.nr_vertices(), fine_n.shape.nr_vertices());
        for(const auto& [a, b] : coarse_matches) {
            if(!done_m[a]) { ring_m[a] = fine_m.shape.neighbourhood(pre_m[a], ring); done_m[a] = 1; }
            if(!done_n[b]) { ring_n[b] = fine_n.shape.neighbourhood(pre_n[b], ring); done_n[b] = 1; }
            for(std::uint32_t m : ring_m[a])
                for(std::uint32_t n : ring_n[b])
                    out.insert(m, n);
        }
        return out;
    }

    struct pruned_problem {
        product_space space;
        shape_ilp ilp;
        std::vector<std::size_t> original_index; // position of each kept element in the unpruned space
    };

    // Keeps the elements whose three vertex pairs are all allowed and rebuilds the rows.
    // Throws pruned_infeasible when some face of either mesh loses all its candidates.
    inline pruned_problem prune_product_space(const product_space& ps, const pair_set& allowed, const mesh& a, const mesh& b)
    {
        pruned_problem out;
        for(std::size_t p = 0; p < ps.size(); ++p) {
            const auto& t = ps.triangles[p];
            bool keep = true;
            for(int k = 0; k < 3 && keep; ++k)
                keep = allowed.contains(t.m[k], t.n[k]);
            if(!keep) continue;
            out.original_index.push_back(p);
            out.space.triangles.push_back(t);
            if(!ps.costs.empty()) out.space.costs.push_back(ps.costs[p]);
        }
        out.ilp = assemble_constraints(out.space, a, b);
        return out;
    }

    class hierarchy_error : public error {
        public:
            hierarchy_error(std::size_t level, const std::string& msg, bool infeasible)
                : error("level " + std::to_string(level) + ": " + msg), level_(level), infeasible_(infeasible) {}
            std::size_t level() const { return level_; }
            bool infeasible() const { return infeasible_; }
        private:
            std::size_t level_;
            bool infeasible_;
    };

    struct level_report {
        std::size_t level = 0;
        int ring = 0;                  // 0 for the unpruned coarsest level
        std::size_t nr_variables = 0;
        std::size_t nr_allowed_pairs = 0;
        solve_result solve;
        matching match;
    };

    struct hierarchy_result {
        std::vector<level_report> levels;
        const matching& final_matching() const { return levels.back().match; }
    };

    struct hierarchy_config {
        solve_config solve;
        int max_ring = 3; // rings tried at a pruned level: solve.ring, solve.ring + 1, ..., max_ring
    };

    // levels[0] is the coarsest. Each finer level is enumerated only over the
    // pairs allowed by the previous level's matching.
    inline hierarchy_result run_hierarchy(const std::vector<resolution_level>& levels_m, const std::vector<resolution_level>& levels_n,
                                          const std::vector<feature_matrix>& features_m, const std::vector<feature_matrix>& features_n,
                                          const hierarchy_config& cfg = {})
    {
        if(levels_m.empty() || levels_m.size() != levels_n.size() || features_m.size() != levels_m.size() ||
           features_n.size() != levels_m.size())
            throw error("hierarchy needs the same nonzero number of levels and feature matrices for both shapes");
        cfg.solve.validate();
        hierarchy_result out;
        for(std::size_t l = 0; l < levels_m.size(); ++l) {
            const auto& lm = levels_m[l];
            const auto& ln = levels_n[l];
            try {
                if(l > 0) {
                    lm.validate(levels_m[l - 1].shape.nr_vertices());
                    ln.validate(levels_n[l - 1].shape.nr_vertices());
                }
            } catch(const error& e) {
                throw hierarchy_error(l, e.what(), false);
            }

            auto attempt = [&](int ring) -> std::optional<level_report> {
                level_report rep;
                rep.level = l;
                rep.ring = ring;
                shape_problem sp;
                try {
                    if(ring == 0) {
                        sp = build_shape_problem(lm.shape, ln.shape, features_m[l], features_n[l]);
                        rep.nr_allowed_pairs = lm.shape.nr_vertices() * ln.shape.nr_vertices();
                    } else {
                        const pair_set allowed = allowed_pairs(out.levels.back().match.pairs, lm, ln, ring);
                        rep.nr_allowed_pairs = allowed.size();
                        sp = build_shape_problem(lm.shape, ln.shape, features_m[l], features_n[l], allowed.filter());
                    }
                } catch(const pruned_infeasible&) {
                    return std::nullopt;
                }
                rep.nr_variables = sp.space.size();
                rep.solve = solve(sp.ilp.instance, cfg.solve);
                if(!rep.solve.found)
                    return std::nullopt;
                rep.match = decode_matching(rep.solve.assignment, sp.space, sp.ilp, lm.shape.nr_vertices(), &features_m[l], &features_n[l]);
                return rep;
            };

            std::optional<level_report> rep;
            try {
                if(l == 0) {
                    rep = attempt(0);
                } else {
                    for(int ring = cfg.solve.ring; ring <= std::max(cfg.max_ring, cfg.solve.ring) && !rep; ++ring)
                        rep = attempt(ring);
                }
            } catch(const hierarchy_error&) {
                throw;
            } catch(const mesh_error& e) {
                throw hierarchy_error(l, e.what(), false);
            } catch(const feature_dimension_mismatch& e) {
                throw hierarchy_error(l, e.what(), false);
            }
            if(!rep)
                throw hierarchy_error(l, l == 0 ? "no feasible matching" : "no feasible matching within the ring ladder", true);
            out.levels.push_back(std::move(*rep));
        }
        return out;
    }

}
