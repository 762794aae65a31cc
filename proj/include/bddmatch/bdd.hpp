#pragma once

#include "error.hpp"

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bddmatch {

    using var_id = std::uint32_t;

    // Layered, reduced binary decision diagram for a single constraint.
    //
    // Nodes are stored contiguously layer by layer. Children of a node in layer l
    // are flat node indices of layer l+1 or one of the two terminals. The TRUE
    // terminal is only reachable from the last layer (no skip arcs), FALSE from
    // any layer. After construction every node is reachable from the root and
    // can reach TRUE.
    class bdd {
        public:
            static constexpr std::uint32_t true_terminal = 0xFFFFFFFEu;
            static constexpr std::uint32_t false_terminal = 0xFFFFFFFFu;

            struct node {
                std::uint32_t lo;
                std::uint32_t hi;
                bool operator==(const node&) const = default;
            };

            static bool is_terminal(std::uint32_t t) { return t >= true_terminal; }

            bdd() = default;

            // Layers given with layer-local child indices (or terminals); the result is reduced.
            // Throws empty_feasible_set if the root cannot reach TRUE.
            bdd(std::vector<var_id> variables, const std::vector<std::vector<node>>& local_layers);

            std::size_t nr_layers() const { return variables_.size(); }
            std::size_t nr_nodes() const { return nodes_.size(); }
            std::span<const var_id> variables() const { return variables_; }
            var_id variable(std::size_t l) const { return variables_[l]; }

            std::size_t layer_begin(std::size_t l) const { return layer_offsets_[l]; }
            std::size_t layer_end(std::size_t l) const { return layer_offsets_[l + 1]; }
            std::size_t layer_width(std::size_t l) const { return layer_end(l) - layer_begin(l); }
            std::span<const node> layer(std::size_t l) const
            {
                return {nodes_.data() + layer_begin(l), layer_width(l)};
            }
            const node& operator[](std::size_t flat) const { return nodes_[flat]; }
            std::span<const node> nodes() const { return nodes_; }

            std::vector<std::size_t> layer_widths() const
            {
                std::vector<std::size_t> w(nr_layers());
                for(std::size_t l = 0; l < nr_layers(); ++l)
                    w[l] = layer_width(l);
                return w;
            }

            // Layer-local children, the form accepted by the constructor.
            std::vector<std::vector<node>> local_layers() const;

            // Returns an equivalent bdd with different variable labels.
            bdd relabeled(std::vector<var_id> variables) const
            {
                assert(variables.size() == variables_.size());
                bdd b = *this;
                b.variables_ = std::move(variables);
                return b;
            }

            // True iff the full assignment (indexed by layer) is accepted.
            bool accepts(std::span<const char> assignment) const;

            // Every layer has a single node with identical children: the constraint is vacuous.
            bool is_tautology() const;

            bool operator==(const bdd&) const = default;

        private:
            void reduce();

            std::vector<var_id> variables_;
            std::vector<node> nodes_;
            std::vector<std::size_t> layer_offsets_;
    };

    // Per-layer cost put on one-arcs; zero-arcs are free.
    using arc_costs = std::vector<double>;

    // Least path costs with the variable forced to 0 / 1. A side with no
    // accepting path is marked infeasible instead of carrying an infinite value.
    struct min_marginal_pair {
        double m0 = 0.0;
        double m1 = 0.0;
        bool feasible0 = true;
        bool feasible1 = true;

        bool forced() const { return !feasible0 || !feasible1; }
        // Only meaningful when both sides are feasible.
        double difference() const { assert(!forced()); return m1 - m0; }
        double min() const
        {
            if(!feasible0) return m1;
            if(!feasible1) return m0;
            return std::min(m0, m1);
        }
    };

    struct min_assignment_result {
        double value;
        std::vector<char> argmin;
    };

    ////////////////////
    // implementation //
    ////////////////////

    inline bdd::bdd(std::vector<var_id> variables, const std::vector<std::vector<node>>& local_layers)
        : variables_(std::move(variables))
    {
        if(variables_.empty())
            throw error("bdd needs at least one variable");
        if(local_layers.size() != variables_.size())
            throw error("bdd layer count does not match variable count");
        layer_offsets_.resize(variables_.size() + 1, 0);
        for(std::size_t l = 0; l < local_layers.size(); ++l)
            layer_offsets_[l + 1] = layer_offsets_[l] + local_layers[l].size();
        if(local_layers[0].size() != 1)
            throw error("bdd must have exactly one root node");
        nodes_.reserve(layer_offsets_.back());
        for(std::size_t l = 0; l < local_layers.size(); ++l) {
            const bool last = l + 1 == local_layers.size();
            auto translate = [&](std::uint32_t t) -> std::uint32_t {
                if(t == false_terminal) return t;
                if(t == true_terminal) {
                    if(!last) throw error("TRUE terminal may only follow the last layer");
                    return t;
                }
                if(last || t >= local_layers[l + 1].size())
                    throw error("bdd arc points outside the next layer");
                return static_cast<std::uint32_t>(layer_offsets_[l + 1] + t);
            };
            for(const node& n : local_layers[l])
                nodes_.push_back({translate(n.lo), translate(n.hi)});
        }
        reduce();
    }

    inline std::vector<std::vector<bdd::node>> bdd::local_layers() const
    {
        std::vector<std::vector<node>> out(nr_layers());
        for(std::size_t l = 0; l < nr_layers(); ++l) {
            const std::size_t next = l + 1 < nr_layers() ? layer_begin(l + 1) : 0;
            auto local = [&](std::uint32_t t) { return is_terminal(t) ? t : static_cast<std::uint32_t>(t - next); };
            for(const node& n : layer(l))
                out[l].push_back({local(n.lo), local(n.hi)});
        }
        return out;
    }

    inline void bdd::reduce()
    {
        const std::size_t nr_l = nr_layers();
        constexpr std::uint32_t dead = std::numeric_limits<std::uint32_t>::max() - 2;

        // Bottom-up: drop nodes that cannot reach TRUE and merge nodes with equal children.
        std::vector<std::uint32_t> rep(nodes_.size(), dead);
        std::vector<node> merged_children(nodes_.size());
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> unique;
        auto mapped = [&](std::uint32_t t) -> std::uint32_t {
            if(is_terminal(t)) return t;
            return rep[t] == dead ? false_terminal : rep[t];
        };
        for(std::size_t l = nr_l; l-- > 0;) {
            unique.clear();
            for(std::size_t v = layer_begin(l); v < layer_end(l); ++v) {
                const node c{mapped(nodes_[v].lo), mapped(nodes_[v].hi)};
                if(c.lo == false_terminal && c.hi == false_terminal)
                    continue;
                auto [it, inserted] = unique.try_emplace({c.lo, c.hi}, static_cast<std::uint32_t>(v));
                rep[v] = it->second;
                merged_children[v] = c;
            }
        }
        if(rep[0] == dead)
            throw empty_feasible_set();

        // Top-down: renumber surviving representatives in breadth-first order,
        // zero-arc before one-arc, which makes the layout canonical.
        std::vector<std::uint32_t> new_index(nodes_.size(), dead);
        std::vector<std::vector<std::uint32_t>> order(nr_l);
        order[0].push_back(rep[0]);
        std::vector<node> new_nodes;
        std::vector<std::size_t> new_offsets(nr_l + 1, 0);
        for(std::size_t l = 0; l < nr_l; ++l) {
            new_offsets[l + 1] = new_offsets[l] + order[l].size();
            for(std::size_t k = 0; k < order[l].size(); ++k)
                new_index[order[l][k]] = static_cast<std::uint32_t>(new_offsets[l] + k);
            if(l + 1 < nr_l) {
                for(std::uint32_t v : order[l]) {
                    for(std::uint32_t c : {merged_children[v].lo, merged_children[v].hi}) {
                        if(!is_terminal(c) && new_index[c] == dead) {
                            new_index[c] = dead - 1;
                            order[l + 1].push_back(c);
                        }
                    }
                }
            }
        }
        new_nodes.reserve(new_offsets.back());
        for(std::size_t l = 0; l < nr_l; ++l) {
            for(std::uint32_t v : order[l]) {
                auto remap = [&](std::uint32_t c) { return is_terminal(c) ? c : new_index[c]; };
                new_nodes.push_back({remap(merged_children[v].lo), remap(merged_children[v].hi)});
            }
        }
        nodes_ = std::move(new_nodes);
        layer_offsets_ = std::move(new_offsets);
    }

    inline bool bdd::accepts(std::span<const char> assignment) const
    {
        assert(assignment.size() == nr_layers());
        std::uint32_t v = 0;
        for(std::size_t l = 0; l < nr_layers(); ++l) {
            v = assignment[l] ? nodes_[v].hi : nodes_[v].lo;
            if(v == false_terminal) return false;
        }
        return v == true_terminal;
    }

    inline bool bdd::is_tautology() const
    {
        for(std::size_t l = 0; l < nr_layers(); ++l)
            if(layer_width(l) != 1 || nodes_[layer_begin(l)].lo != nodes_[layer_begin(l)].hi)
                return false;
        return true;
    }

    // Compiles sum_i coefficients[i] * x_i == rhs over the given variable order.
    // Nodes are keyed by partial sum and pruned by the range still reachable by
    // the remaining coefficients; reduction removes residual dead states.
    inline bdd build_equality_bdd(std::span<const long long> coefficients, long long rhs, std::span<const var_id> variables)
    {
        const std::size_t n = coefficients.size();
        if(n == 0 || n != variables.size())
            throw error("equality row needs one coefficient per variable and at least one variable");
        {
            std::vector<var_id> sorted(variables.begin(), variables.end());
            std::sort(sorted.begin(), sorted.end());
            if(std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw error("equality row lists a variable twice");
        }
        // reachable range of the suffix starting at layer l
        std::vector<long long> suffix_min(n + 1, 0), suffix_max(n + 1, 0);
        for(std::size_t l = n; l-- > 0;) {
            suffix_min[l] = suffix_min[l + 1] + std::min(0LL, coefficients[l]);
            suffix_max[l] = suffix_max[l + 1] + std::max(0LL, coefficients[l]);
        }
        if(rhs < suffix_min[0] || rhs > suffix_max[0])
            throw empty_feasible_set("equality row has no feasible 0-1 assignment");

        std::vector<std::vector<bdd::node>> layers(n);
        std::vector<long long> states{0};
        for(std::size_t l = 0; l < n; ++l) {
            const bool last = l + 1 == n;
            std::map<long long, std::uint32_t> next;
            auto target = [&](long long sum) -> std::uint32_t {
                if(last) return sum == rhs ? bdd::true_terminal : bdd::false_terminal;
                const long long remaining = rhs - sum;
                if(remaining < suffix_min[l + 1] || remaining > suffix_max[l + 1])
                    return bdd::false_terminal;
                return next.try_emplace(sum, static_cast<std::uint32_t>(next.size())).first->second;
            };
            for(long long s : states)
                layers[l].push_back({target(s), target(s + coefficients[l])});
            std::vector<long long> next_states(next.size());
            for(const auto& [sum, idx] : next)
                next_states[idx] = sum;
            states = std::move(next_states);
        }
        try {
            return bdd(std::vector<var_id>(variables.begin(), variables.end()), layers);
        } catch(const empty_feasible_set&) {
            throw empty_feasible_set("equality row has no feasible 0-1 assignment");
        }
    }

    inline bdd build_equality_bdd(std::initializer_list<long long> coefficients, long long rhs, std::initializer_list<var_id> variables)
    {
        return build_equality_bdd(std::span<const long long>(coefficients.begin(), coefficients.size()), rhs,
                                  std::span<const var_id>(variables.begin(), variables.size()));
    }

    namespace detail {

        // Distance from each node to TRUE; one-arc at layer l costs costs[l].
        inline void backward_distances(const bdd& b, std::span<const double> costs, std::span<double> dist)
        {
            assert(dist.size() == b.nr_nodes());
            auto d = [&](std::uint32_t t) { return t == bdd::true_terminal ? 0.0 : dist[t]; };
            for(std::size_t l = b.nr_layers(); l-- > 0;) {
                const double c = costs[l];
                for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                    const bdd::node& n = b[v];
                    double best = std::numeric_limits<double>::infinity();
                    if(n.lo != bdd::false_terminal) best = d(n.lo);
                    if(n.hi != bdd::false_terminal) best = std::min(best, c + d(n.hi));
                    dist[v] = best;
                }
            }
        }

        // Distance from the root to each node.
        inline void forward_distances(const bdd& b, std::span<const double> costs, std::span<double> dist)
        {
            assert(dist.size() == b.nr_nodes());
            std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
            dist[0] = 0.0;
            for(std::size_t l = 0; l + 1 < b.nr_layers(); ++l) {
                const double c = costs[l];
                for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                    const bdd::node& n = b[v];
                    if(n.lo != bdd::false_terminal) dist[n.lo] = std::min(dist[n.lo], dist[v]);
                    if(n.hi != bdd::false_terminal) dist[n.hi] = std::min(dist[n.hi], dist[v] + c);
                }
            }
        }

        // Min-marginals of layer l from root distances of layer l and
        // TRUE-distances of layer l+1.
        inline min_marginal_pair layer_min_marginals(const bdd& b, std::size_t l, double cost,
                                                     std::span<const double> fwd, std::span<const double> bwd)
        {
            min_marginal_pair mm{0.0, 0.0, false, false};
            double m0 = std::numeric_limits<double>::infinity();
            double m1 = std::numeric_limits<double>::infinity();
            auto d = [&](std::uint32_t t) { return t == bdd::true_terminal ? 0.0 : bwd[t]; };
            for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                const bdd::node& n = b[v];
                if(n.lo != bdd::false_terminal) { m0 = std::min(m0, fwd[v] + d(n.lo)); mm.feasible0 = true; }
                if(n.hi != bdd::false_terminal) { m1 = std::min(m1, fwd[v] + cost + d(n.hi)); mm.feasible1 = true; }
            }
            mm.m0 = mm.feasible0 ? m0 : 0.0;
            mm.m1 = mm.feasible1 ? m1 : 0.0;
            return mm;
        }

    }

    // Minimum-cost accepted assignment. Ties prefer the zero-arc at each layer,
    // which yields the lexicographically smallest minimiser.
    inline min_assignment_result min_assignment(const bdd& b, std::span<const double> costs)
    {
        if(costs.size() != b.nr_layers())
            throw error("cost vector length does not match bdd");
        std::vector<double> dist(b.nr_nodes());
        detail::backward_distances(b, costs, dist);
        min_assignment_result r{dist[0], std::vector<char>(b.nr_layers(), 0)};
        std::uint32_t v = 0;
        auto d = [&](std::uint32_t t) { return t == bdd::true_terminal ? 0.0 : dist[t]; };
        for(std::size_t l = 0; l < b.nr_layers(); ++l) {
            const bdd::node& n = b[v];
            if(n.lo != bdd::false_terminal && (n.hi == bdd::false_terminal || d(n.lo) <= costs[l] + d(n.hi))) {
                v = n.lo;
            } else {
                r.argmin[l] = 1;
                v = n.hi;
            }
        }
        assert(v == bdd::true_terminal);
        return r;
    }

    inline std::vector<min_marginal_pair> min_marginals(const bdd& b, std::span<const double> costs)
    {
        if(costs.size() != b.nr_layers())
            throw error("cost vector length does not match bdd");
        std::vector<double> fwd(b.nr_nodes()), bwd(b.nr_nodes());
        detail::forward_distances(b, costs, fwd);
        detail::backward_distances(b, costs, bwd);
        std::vector<min_marginal_pair> out(b.nr_layers());
        for(std::size_t l = 0; l < b.nr_layers(); ++l)
            out[l] = detail::layer_min_marginals(b, l, costs[l], fwd, bwd);
        return out;
    }

    inline std::uint64_t count_accepting_paths(const bdd& b)
    {
        std::vector<std::uint64_t> paths(b.nr_nodes(), 0);
        auto p = [&](std::uint32_t t) -> std::uint64_t {
            if(t == bdd::true_terminal) return 1;
            if(t == bdd::false_terminal) return 0;
            return paths[t];
        };
        for(std::size_t l = b.nr_layers(); l-- > 0;)
            for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v)
                paths[v] = p(b[v].lo) + p(b[v].hi);
        return paths[0];
    }

    // Result of conditioning a bdd on fixed variables.
    struct restriction {
        enum class kind { constraint, always_true, always_false };
        kind k;
        bdd result; // valid for kind::constraint, over the free variables only
        std::vector<std::size_t> kept_layers;
    };

    // Removes the layers whose variable is fixed (fixed(l) returns 0/1, or -1 when free).
    template<typename FIXED>
    restriction restrict_bdd(const bdd& b, FIXED&& fixed)
    {
        const std::size_t nr_l = b.nr_layers();
        std::vector<int> value(nr_l);
        std::vector<std::size_t> kept;
        for(std::size_t l = 0; l < nr_l; ++l) {
            value[l] = fixed(l);
            if(value[l] < 0) kept.push_back(l);
        }
        // rep[v]: the node or terminal that v collapses to once fixed layers are skipped
        std::vector<std::uint32_t> rep(b.nr_nodes());
        auto r = [&](std::uint32_t t) { return bdd::is_terminal(t) ? t : rep[t]; };
        for(std::size_t l = nr_l; l-- > 0;) {
            for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                if(value[l] < 0) rep[v] = static_cast<std::uint32_t>(v);
                else rep[v] = r(value[l] ? b[v].hi : b[v].lo);
            }
        }
        const std::uint32_t root = r(0);
        if(root == bdd::true_terminal) return {restriction::kind::always_true, {}, {}};
        if(root == bdd::false_terminal) return {restriction::kind::always_false, {}, {}};

        // root collapses into the first kept layer; other nodes there are unreachable and dropped by reduction
        std::vector<std::uint32_t> local(b.nr_nodes(), 0);
        std::vector<std::vector<bdd::node>> layers(kept.size());
        std::vector<var_id> vars;
        for(std::size_t k = 0; k < kept.size(); ++k) {
            const std::size_t l = kept[k];
            vars.push_back(b.variable(l));
            if(k == 0) {
                local[root] = 0;
            } else {
                std::uint32_t idx = 0;
                for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v)
                    local[v] = idx++;
            }
        }
        for(std::size_t k = 0; k < kept.size(); ++k) {
            const std::size_t l = kept[k];
            auto conv = [&](std::uint32_t t) { t = r(t); return bdd::is_terminal(t) ? t : local[t]; };
            if(k == 0) {
                layers[0].push_back({conv(b[root].lo), conv(b[root].hi)});
            } else {
                for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v)
                    layers[k].push_back({conv(b[v].lo), conv(b[v].hi)});
            }
        }
        try {
            bdd out(std::move(vars), layers);
            if(out.is_tautology())
                return {restriction::kind::always_true, {}, {}};
            return {restriction::kind::constraint, std::move(out), std::move(kept)};
        } catch(const empty_feasible_set&) {
            return {restriction::kind::always_false, {}, {}};
        }
    }

}
