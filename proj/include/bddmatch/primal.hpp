#pragma once

#include "dual.hpp"

#include <chrono>
#include <cmath>
#include <functional>

namespace bddmatch {

    // Relative gap below which a primal solution counts as globally optimal.
    inline constexpr double certification_threshold = 1e-2;

    struct gap_report {
        double primal = 0.0;
        double dual = 0.0;
        double primal_dual_gap = 0.0;
        bool certified = false;
    };

    // (p - d) / p. A zero primal is certified exactly when the bound reaches it.
    inline gap_report make_gap_report(double primal, double dual)
    {
        gap_report r{primal, dual, 0.0, false};
        if(std::abs(primal) > 1e-12)
            r.primal_dual_gap = (primal - dual) / std::abs(primal);
        else
            r.primal_dual_gap = primal - dual <= 1e-9 ? 0.0 : std::numeric_limits<double>::infinity();
        r.primal_dual_gap = std::max(r.primal_dual_gap, 0.0);
        r.certified = r.primal_dual_gap < certification_threshold;
        return r;
    }

    struct agreement {
        bool agrees = false;
        bool forced = false;   // some constraint admits only one value
        double score = 0.0;    // |sum_j M_i^j|, unused when forced
        int preferred = 0;
    };

    // Per-variable vote of the subproblems: M_i^j > 0 prefers 0, M_i^j < 0 prefers 1.
    inline std::vector<agreement> agreement_scores(const dual_state& state)
    {
        const ilp_instance& inst = state.instance();
        const auto mm = state.min_marginals();
        std::vector<agreement> out(inst.nr_variables());
        for(var_id i = 0; i < inst.nr_variables(); ++i) {
            agreement& a = out[i];
            const auto incs = state.incidences(i);
            if(incs.empty()) {
                a = {true, true, 0.0, inst.cost(i) < 0.0 ? 1 : 0};
                continue;
            }
            bool forced0 = false, forced1 = false, pos = false, neg = false, zero = false;
            double sum = 0.0;
            for(const auto& e : incs) {
                const min_marginal_pair& p = mm[e.flat];
                if(!p.feasible1) forced0 = true;
                else if(!p.feasible0) forced1 = true;
                else {
                    const double m = p.difference();
                    sum += m;
                    if(m > 0.0) pos = true;
                    else if(m < 0.0) neg = true;
                    else zero = true;
                }
            }
            if(forced0 || forced1) {
                a.forced = true;
                a.agrees = !(forced0 && forced1);
                a.preferred = forced1 ? 1 : 0;
                a.score = std::abs(sum);
                continue;
            }
            a.agrees = !zero && (pos != neg);
            a.score = std::abs(sum);
            a.preferred = sum > 0.0 ? 0 : 1;
        }
        return out;
    }

    // Value per variable: 0, 1, or -1 when free.
    using partial_assignment = std::vector<signed char>;

    struct reduced_problem {
        partial_assignment fixed;             // over the original instance
        ilp_instance instance;                // over the free variables only
        std::vector<var_id> original_id;      // reduced id -> original id
        std::vector<double> lambda;           // duals restricted to the reduced instance, still feasible
        double fixed_cost = 0.0;              // cost of the fixed variables
    };

    namespace detail {

        // Conditions every constraint on `fixed` and compacts the free variables.
        // Throws infeasible_after_fixing if some constraint cannot be satisfied.
        inline reduced_problem reduce_instance(const ilp_instance& inst, partial_assignment fixed, std::span<const double> lambda,
                                               const std::function<std::size_t(std::size_t)>& lambda_offset)
        {
            reduced_problem out;
            out.fixed = std::move(fixed);
            std::vector<var_id> new_id(inst.nr_variables(), std::numeric_limits<var_id>::max());
            std::vector<double> costs;
            for(var_id i : inst.sweep_order()) {
                if(out.fixed[i] >= 0) {
                    if(out.fixed[i]) out.fixed_cost += inst.cost(i);
                    continue;
                }
                new_id[i] = static_cast<var_id>(out.original_id.size());
                out.original_id.push_back(i);
                costs.push_back(inst.cost(i));
            }
            out.instance = ilp_instance(costs);
            std::vector<double> lam;
            std::vector<double> lambda_sum(costs.size(), 0.0);
            std::vector<std::uint32_t> lambda_count(costs.size(), 0);
            std::vector<std::pair<std::size_t, var_id>> lambda_owner;
            for(std::size_t j = 0; j < inst.nr_constraints(); ++j) {
                const bdd& b = inst.diagram(j);
                const auto vars = b.variables();
                auto r = restrict_bdd(b, [&](std::size_t l) { return static_cast<int>(out.fixed[vars[l]]); });
                if(r.k == restriction::kind::always_false)
                    throw infeasible_after_fixing("constraint " + std::to_string(j) + " cannot be satisfied after fixing");
                if(r.k == restriction::kind::always_true)
                    continue;
                std::vector<var_id> relabeled;
                for(var_id v : r.result.variables())
                    relabeled.push_back(new_id[v]);
                std::optional<linear_row> row;
                if(const auto& orig = inst.constraints()[j].row) {
                    linear_row rr;
                    rr.rhs = orig->rhs;
                    for(std::size_t k = 0; k < orig->variables.size(); ++k) {
                        const var_id v = orig->variables[k];
                        if(out.fixed[v] >= 0) rr.rhs -= orig->coefficients[k] * out.fixed[v];
                        else { rr.variables.push_back(new_id[v]); rr.coefficients.push_back(orig->coefficients[k]); }
                    }
                    row = std::move(rr);
                }
                if(!lambda.empty()) {
                    for(std::size_t l : r.kept_layers) {
                        const double v = lambda[lambda_offset(j) + l];
                        const var_id ni = new_id[vars[l]];
                        lam.push_back(v);
                        lambda_owner.emplace_back(lam.size() - 1, ni);
                        lambda_sum[ni] += v;
                        ++lambda_count[ni];
                    }
                }
                out.instance.add_constraint(r.result.relabeled(std::move(relabeled)), std::move(row));
            }
            if(!lambda.empty()) {
                // constraints that became vacuous took part of c_i with them; hand it back evenly
                for(auto [pos, ni] : lambda_owner)
                    lam[pos] += (costs[ni] - lambda_sum[ni]) / lambda_count[ni];
                out.lambda = std::move(lam);
            }
            return out;
        }

    }

    namespace detail {

        inline std::vector<var_id> fixing_candidates(const std::vector<agreement>& scores)
        {
            std::vector<var_id> candidates;
            for(var_id i = 0; i < scores.size(); ++i)
                if(scores[i].agrees) candidates.push_back(i);
            std::stable_sort(candidates.begin(), candidates.end(), [&](var_id a, var_id b) {
                if(scores[a].forced != scores[b].forced) return scores[a].forced;
                return scores[a].score > scores[b].score;
            });
            return candidates;
        }

        inline std::size_t fixing_count(double fraction, std::size_t nr_candidates)
        {
            if(!(fraction > 0.0 && fraction <= 1.0))
                throw error("fixing fraction must lie in (0, 1]");
            return std::min(nr_candidates, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(nr_candidates) - 1e-9)));
        }

    }

    // Fixes the top `fraction` of agreeing variables (forced ones first, then
    // by score) to their preferred values and conditions the constraints on them.
    inline reduced_problem fix_and_reduce(const ilp_instance& inst, const dual_state& state, double fraction,
                                          const std::vector<agreement>* precomputed = nullptr)
    {
        std::vector<agreement> local;
        if(!precomputed) local = agreement_scores(state);
        const std::vector<agreement>& scores = precomputed ? *precomputed : local;
        const auto candidates = detail::fixing_candidates(scores);
        const std::size_t nr_fix = detail::fixing_count(fraction, candidates.size());
        partial_assignment fixed(inst.nr_variables(), -1);
        for(std::size_t k = 0; k < nr_fix; ++k)
            fixed[candidates[k]] = static_cast<signed char>(scores[candidates[k]].preferred);
        return detail::reduce_instance(inst, std::move(fixed), state.lambda(), [&](std::size_t j) { return state.lambda_offset(j); });
    }

    namespace detail {

        // Keeps every constraint consistent with a growing partial assignment.
        // After each fix, values that no longer lie on a root-to-TRUE path of
        // some bdd are removed; a variable left with one value is fixed too.
        class fixing_propagator {
            public:
                explicit fixing_propagator(const ilp_instance& inst)
                    : inst_(inst), incidences_(inst.incidences()), fixed_(inst.nr_variables(), -1), queued_(inst.nr_constraints(), 0)
                {
                }

                // Propagates every constraint once; false if the instance is already inconsistent.
                bool initialize()
                {
                    for(std::size_t j = 0; j < inst_.nr_constraints(); ++j)
                        enqueue(j);
                    return drain();
                }

                // Fixes x_i = beta unless propagation runs into a contradiction,
                // in which case every assignment made by this call is undone.
                bool try_fix(var_id i, int beta)
                {
                    if(fixed_[i] >= 0)
                        return fixed_[i] == beta;
                    const std::size_t mark = trail_.size();
                    assign(i, beta);
                    if(drain())
                        return true;
                    for(std::size_t k = trail_.size(); k-- > mark;)
                        fixed_[trail_[k]] = -1;
                    trail_.resize(mark);
                    return false;
                }

                const partial_assignment& fixed() const { return fixed_; }

                // Returns to an earlier, consistent assignment.
                void restore(const partial_assignment& earlier)
                {
                    fixed_ = earlier;
                    trail_.clear();
                }

            private:
                void enqueue(std::size_t j)
                {
                    if(queued_[j]) return;
                    queued_[j] = 1;
                    queue_.push_back(j);
                }

                void assign(var_id i, int beta)
                {
                    fixed_[i] = static_cast<signed char>(beta);
                    trail_.push_back(i);
                    for(auto [j, l] : incidences_[i])
                        enqueue(j);
                }

                bool drain()
                {
                    bool ok = true;
                    while(!queue_.empty()) {
                        const std::size_t j = queue_.back();
                        queue_.pop_back();
                        queued_[j] = 0;
                        if(ok && !revise(j))
                            ok = false;
                    }
                    return ok;
                }

                bool revise(std::size_t j)
                {
                    const bdd& b = inst_.diagram(j);
                    const auto vars = b.variables();
                    auto allow = [&](std::size_t l, int beta) { return fixed_[vars[l]] < 0 || fixed_[vars[l]] == beta; };
                    alive_.assign(b.nr_nodes(), 0);
                    reach_.assign(b.nr_nodes(), 0);
                    auto live = [&](std::uint32_t t) { return t == bdd::true_terminal || (!bdd::is_terminal(t) && alive_[t]); };
                    for(std::size_t l = b.nr_layers(); l-- > 0;)
                        for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v)
                            alive_[v] = (allow(l, 0) && live(b[v].lo)) || (allow(l, 1) && live(b[v].hi));
                    if(!alive_[0])
                        return false;
                    reach_[0] = 1;
                    for(std::size_t l = 0; l < b.nr_layers(); ++l) {
                        bool support[2] = {false, false};
                        for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                            if(!reach_[v]) continue;
                            const std::uint32_t child[2] = {b[v].lo, b[v].hi};
                            for(int beta = 0; beta < 2; ++beta) {
                                if(!allow(l, beta) || !live(child[beta])) continue;
                                support[beta] = true;
                                if(!bdd::is_terminal(child[beta])) reach_[child[beta]] = 1;
                            }
                        }
                        const var_id i = vars[l];
                        if(fixed_[i] < 0 && support[0] != support[1])
                            assign(i, support[1] ? 1 : 0);
                    }
                    return true;
                }

                const ilp_instance& inst_;
                std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> incidences_;
                partial_assignment fixed_;
                std::vector<var_id> trail_;
                std::vector<std::size_t> queue_;
                std::vector<char> queued_;
                std::vector<char> alive_, reach_;
        };

    }

    enum class exact_status { optimal, feasible, infeasible, timed_out };

    struct exact_result {
        exact_status status;
        std::vector<char> assignment; // best found, meaningful only when has_solution
        bool has_solution = false;
        double objective = std::numeric_limits<double>::infinity();
        std::size_t nodes = 0;
    };

    struct exact_options {
        double time_limit_seconds = std::numeric_limits<double>::infinity();
        std::vector<double> lambda;  // optional feasible duals (flat, constraint-major) used for bounding
        std::size_t node_limit = std::numeric_limits<std::size_t>::max(); // reported as timed_out when hit
        bool stop_at_first = false;  // return the first feasible assignment found
    };

    namespace detail {

        // Depth-first branch and bound. The bound at a node is the sum of the
        // per-constraint minima under the current duals with fixed arcs
        // disabled; min-marginals of the same sweeps drive propagation.
        class branch_and_bound {
            public:
                branch_and_bound(const ilp_instance& inst, const exact_options& opt)
                    : inst_(inst), opt_(opt), start_(std::chrono::steady_clock::now())
                {
                    const std::size_t nr_c = inst.nr_constraints();
                    offset_.resize(nr_c + 1, 0);
                    for(std::size_t j = 0; j < nr_c; ++j)
                        offset_[j + 1] = offset_[j] + inst.diagram(j).nr_layers();
                    if(!opt.lambda.empty()) {
                        if(opt.lambda.size() != offset_.back())
                            throw error("dual vector does not match instance");
                        lambda_ = opt.lambda;
                    } else {
                        const auto inc = inst.incidences();
                        lambda_.resize(offset_.back());
                        for(var_id i = 0; i < inst.nr_variables(); ++i)
                            for(auto [j, l] : inc[i])
                                lambda_[offset_[j] + l] = inst.cost(i) / static_cast<double>(inc[i].size());
                    }
                    const auto inc = inst.incidences();
                    constrained_.assign(inst.nr_variables(), 0);
                    for(var_id i = 0; i < inst.nr_variables(); ++i)
                        constrained_[i] = !inc[i].empty();
                    for(var_id i : inst.sweep_order())
                        if(constrained_[i]) order_.push_back(i);
                    incidences_ = inc;
                }

                exact_result run()
                {
                    partial_assignment fixed(inst_.nr_variables(), -1);
                    for(var_id i = 0; i < inst_.nr_variables(); ++i)
                        if(!constrained_[i]) fixed[i] = inst_.cost(i) < 0.0 ? 1 : 0;
                    search(fixed);
                    exact_result r;
                    r.nodes = nodes_;
                    r.assignment = best_;
                    r.has_solution = found_;
                    r.objective = best_value_;
                    if(timed_out_) r.status = exact_status::timed_out;
                    else if(stopped_) r.status = exact_status::feasible;
                    else r.status = found_ ? exact_status::optimal : exact_status::infeasible;
                    return r;
                }

            private:
                struct evaluation {
                    bool feasible;
                    double bound;
                    std::vector<double> minimum;             // per constraint
                    std::vector<min_marginal_pair> marginals; // flat
                };

                evaluation evaluate(const partial_assignment& fixed) const
                {
                    evaluation ev{true, 0.0, std::vector<double>(inst_.nr_constraints()), std::vector<min_marginal_pair>(offset_.back())};
                    const double inf = std::numeric_limits<double>::infinity();
                    std::vector<double> fwd, bwd;
                    for(std::size_t j = 0; j < inst_.nr_constraints(); ++j) {
                        const bdd& b = inst_.diagram(j);
                        const auto vars = b.variables();
                        const double* cost = lambda_.data() + offset_[j];
                        fwd.assign(b.nr_nodes(), inf);
                        bwd.assign(b.nr_nodes(), inf);
                        auto allow = [&](std::size_t l, int beta) { return fixed[vars[l]] < 0 || fixed[vars[l]] == beta; };
                        auto dist = [&](std::uint32_t t) { return t == bdd::true_terminal ? 0.0 : (t == bdd::false_terminal ? inf : bwd[t]); };
                        for(std::size_t l = b.nr_layers(); l-- > 0;) {
                            for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                                double best = inf;
                                if(allow(l, 0)) best = dist(b[v].lo);
                                if(allow(l, 1)) best = std::min(best, cost[l] + dist(b[v].hi));
                                bwd[v] = best;
                            }
                        }
                        if(bwd[0] == inf) {
                            ev.feasible = false;
                            return ev;
                        }
                        ev.minimum[j] = bwd[0];
                        ev.bound += bwd[0];
                        fwd[0] = 0.0;
                        for(std::size_t l = 0; l < b.nr_layers(); ++l) {
                            min_marginal_pair mm{inf, inf, false, false};
                            for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                                if(fwd[v] == inf) continue;
                                const bdd::node& n = b[v];
                                if(allow(l, 0) && n.lo != bdd::false_terminal) {
                                    const double through = fwd[v] + dist(n.lo);
                                    if(through < inf) { mm.m0 = std::min(mm.m0, through); mm.feasible0 = true; }
                                    if(!bdd::is_terminal(n.lo)) fwd[n.lo] = std::min(fwd[n.lo], fwd[v]);
                                }
                                if(allow(l, 1) && n.hi != bdd::false_terminal) {
                                    const double through = fwd[v] + cost[l] + dist(n.hi);
                                    if(through < inf) { mm.m1 = std::min(mm.m1, through); mm.feasible1 = true; }
                                    if(!bdd::is_terminal(n.hi)) fwd[n.hi] = std::min(fwd[n.hi], fwd[v] + cost[l]);
                                }
                            }
                            ev.marginals[offset_[j] + l] = mm;
                        }
                    }
                    for(var_id i = 0; i < inst_.nr_variables(); ++i)
                        if(!constrained_[i] && fixed[i] == 1) ev.bound += inst_.cost(i);
                    return ev;
                }

                double tolerance() const { return 1e-9 * (1.0 + std::abs(best_value_)); }

                bool out_of_time()
                {
                    if(timed_out_) return true;
                    if(std::isinf(opt_.time_limit_seconds)) return false;
                    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
                    timed_out_ = elapsed > opt_.time_limit_seconds;
                    return timed_out_;
                }

                void search(partial_assignment fixed)
                {
                    if(stopped_ || out_of_time()) return;
                    if(++nodes_ > opt_.node_limit) {
                        timed_out_ = true;
                        return;
                    }
                    evaluation ev;
                    // propagate: drop values that are infeasible or cannot beat the incumbent
                    while(true) {
                        ev = evaluate(fixed);
                        if(!ev.feasible || ev.bound >= best_value_ - tolerance())
                            return;
                        bool changed = false;
                        for(var_id i : order_) {
                            if(fixed[i] >= 0) continue;
                            bool possible[2] = {true, true};
                            double lb[2] = {ev.bound, ev.bound};
                            for(auto [j, l] : incidences_[i]) {
                                const min_marginal_pair& mm = ev.marginals[offset_[j] + l];
                                if(!mm.feasible0) possible[0] = false; else lb[0] += mm.m0 - ev.minimum[j];
                                if(!mm.feasible1) possible[1] = false; else lb[1] += mm.m1 - ev.minimum[j];
                            }
                            for(int beta = 0; beta < 2; ++beta)
                                if(possible[beta] && lb[beta] >= best_value_ - tolerance()) possible[beta] = false;
                            if(!possible[0] && !possible[1]) return;
                            if(!possible[0] || !possible[1]) {
                                fixed[i] = possible[1] ? 1 : 0;
                                changed = true;
                            }
                        }
                        if(!changed) break;
                    }
                    var_id branch = std::numeric_limits<var_id>::max();
                    for(var_id i : order_)
                        if(fixed[i] < 0) { branch = i; break; }
                    if(branch == std::numeric_limits<var_id>::max()) {
                        std::vector<char> x(fixed.begin(), fixed.end());
                        const double value = inst_.objective(x);
                        if(!found_ || value < best_value_) {
                            best_value_ = value;
                            best_ = std::move(x);
                            found_ = true;
                            stopped_ = opt_.stop_at_first;
                        }
                        return;
                    }
                    double lb[2] = {ev.bound, ev.bound};
                    for(auto [j, l] : incidences_[branch]) {
                        const min_marginal_pair& mm = ev.marginals[offset_[j] + l];
                        lb[0] += mm.m0 - ev.minimum[j];
                        lb[1] += mm.m1 - ev.minimum[j];
                    }
                    const int first = lb[1] < lb[0] ? 1 : 0;
                    // the evaluation is as large as the instance; do not keep one per depth
                    ev = evaluation{};
                    for(int beta : {first, 1 - first}) {
                        partial_assignment child = fixed;
                        child[branch] = static_cast<signed char>(beta);
                        search(std::move(child));
                        if(timed_out_ || stopped_) return;
                    }
                }

                const ilp_instance& inst_;
                const exact_options& opt_;
                std::chrono::steady_clock::time_point start_;
                std::vector<std::size_t> offset_;
                std::vector<double> lambda_;
                std::vector<char> constrained_;
                std::vector<var_id> order_;
                std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> incidences_;
                std::vector<char> best_;
                bool found_ = false;
                bool stopped_ = false;
                double best_value_ = std::numeric_limits<double>::infinity();
                std::size_t nodes_ = 0;
                bool timed_out_ = false;
        };

    }

    // Provably optimal assignment by depth-first branch and bound, or
    // infeasible; on timeout the incumbent (if any) is returned.
    inline exact_result exact_solve(const ilp_instance& inst, const exact_options& opt = {})
    {
        return detail::branch_and_bound(inst, opt).run();
    }

    namespace detail {

        // Completes `fixed` to a feasible assignment of `inst`, searching at most node_limit nodes.
        inline std::optional<std::vector<char>> feasible_completion(const ilp_instance& inst, const dual_state& state,
                                                                    const partial_assignment& fixed, std::size_t node_limit)
        {
            try {
                reduced_problem r = reduce_instance(inst, fixed, state.lambda(), [&](std::size_t j) { return state.lambda_offset(j); });
                exact_options opt;
                opt.lambda = std::move(r.lambda);
                opt.node_limit = node_limit;
                opt.stop_at_first = true;
                const exact_result er = exact_solve(r.instance, opt);
                if(!er.has_solution)
                    return std::nullopt;
                std::vector<char> x(inst.nr_variables(), 0);
                for(var_id i = 0; i < inst.nr_variables(); ++i)
                    if(fixed[i] >= 0) x[i] = static_cast<char>(fixed[i]);
                for(std::size_t k = 0; k < r.original_id.size(); ++k)
                    x[r.original_id[k]] = er.assignment[k];
                return x;
            } catch(const infeasible_after_fixing&) {
                return std::nullopt;
            }
        }

    }

    // Like fix_and_reduce, but fixes the candidates one at a time with
    // propagation through all constraints, skipping any fix that would leave
    // some constraint unsatisfiable. Implied values are fixed as well.
    //
    // With a positive probe_node_limit a feasible completion of the current
    // partial assignment is kept as a witness. Fixes that agree with it are
    // safe; any other fix is kept only if a new completion is found within
    // the node limit. If no initial witness is found, only propagation guards the fixing.
    inline reduced_problem fix_and_reduce_propagated(const ilp_instance& inst, const dual_state& state, double fraction,
                                                     const std::vector<agreement>* precomputed = nullptr,
                                                     std::size_t probe_node_limit = 0)
    {
        std::vector<agreement> local;
        if(!precomputed) local = agreement_scores(state);
        const std::vector<agreement>& scores = precomputed ? *precomputed : local;
        const auto candidates = detail::fixing_candidates(scores);
        const std::size_t nr_fix = detail::fixing_count(fraction, candidates.size());
        detail::fixing_propagator prop(inst);
        if(!prop.initialize())
            throw infeasible_after_fixing("constraints are inconsistent before any fixing");
        std::optional<std::vector<char>> witness;
        if(probe_node_limit > 0)
            witness = detail::feasible_completion(inst, state, prop.fixed(), probe_node_limit);
        for(std::size_t k = 0; k < nr_fix; ++k) {
            const var_id i = candidates[k];
            const int beta = scores[i].preferred;
            if(!witness || (*witness)[i] == beta) {
                prop.try_fix(i, beta);
                continue;
            }
            if(prop.fixed()[i] >= 0)
                continue;
            const partial_assignment before = prop.fixed();
            if(!prop.try_fix(i, beta))
                continue;
            if(auto x = detail::feasible_completion(inst, state, prop.fixed(), probe_node_limit))
                witness = std::move(x);
            else
                prop.restore(before);
        }
        return detail::reduce_instance(inst, prop.fixed(), state.lambda(), [&](std::size_t j) { return state.lambda_offset(j); });
    }

    struct primal_config {
        std::vector<double> fractions = {0.9, 0.75, 0.5, 0.25};
        double time_limit_seconds = 60.0;
        bool propagate = true;             // fix with propagation instead of all at once
        std::size_t probe_node_limit = 2000; // feasibility look-ahead per disputed fix, 0 disables it
    };

    struct primal_result {
        std::vector<char> assignment;
        bool found = false;
        gap_report gap;
        double fraction = 0.0;         // fixing fraction that produced the solution, 0 for the untouched instance
        std::size_t attempts = 0;
        bool optimal_residual = false; // residual solve finished without timeout
        bool infeasible = false;

        bool feasible() const { return found; }
        // solution found at the first fixing fraction, without the retry ladder
        bool first_attempt() const { return feasible() && attempts == 1; }
    };

    // agreement scores -> fix a fraction -> exact residual solve, walking down
    // the fraction ladder and finally solving the untouched instance.
    inline primal_result recover_primal(const ilp_instance& inst, const dual_state& state, const primal_config& cfg = {},
                                        std::optional<double> best_dual = std::nullopt)
    {
        primal_result res;
        const double dual = best_dual.value_or(state.lower_bound());
        const auto scores = agreement_scores(state);
        auto finish = [&](std::vector<char> x) {
            res.assignment = std::move(x);
            res.found = true;
            res.gap = make_gap_report(inst.objective(res.assignment), dual);
            return res;
        };
        // cheap propagation-only fixing first, the witness-guarded variant only if its residual has no solution
        std::vector<std::size_t> probe_limits{0};
        if(cfg.propagate && cfg.probe_node_limit > 0)
            probe_limits.push_back(cfg.probe_node_limit);
        for(double fraction : cfg.fractions) {
            ++res.attempts;
            for(std::size_t probes : probe_limits) {
                try {
                    reduced_problem reduced = cfg.propagate ? fix_and_reduce_propagated(inst, state, fraction, &scores, probes)
                                                             : fix_and_reduce(inst, state, fraction, &scores);
                    exact_options opt;
                    opt.time_limit_seconds = cfg.time_limit_seconds;
                    opt.lambda = std::move(reduced.lambda);
                    const exact_result er = exact_solve(reduced.instance, opt);
                    if(!er.has_solution)
                        continue;
                    std::vector<char> x(inst.nr_variables(), 0);
                    for(var_id i = 0; i < inst.nr_variables(); ++i)
                        if(reduced.fixed[i] >= 0) x[i] = static_cast<char>(reduced.fixed[i]);
                    for(std::size_t k = 0; k < reduced.original_id.size(); ++k)
                        x[reduced.original_id[k]] = er.assignment[k];
                    res.fraction = fraction;
                    res.optimal_residual = er.status == exact_status::optimal;
                    return finish(std::move(x));
                } catch(const infeasible_after_fixing&) {
                    continue;
                }
            }
        }
        ++res.attempts;
        exact_options opt;
        opt.time_limit_seconds = cfg.time_limit_seconds;
        opt.lambda.assign(state.lambda().begin(), state.lambda().end());
        const exact_result er = exact_solve(inst, opt);
        if(!er.has_solution) {
            res.infeasible = er.status == exact_status::infeasible;
            res.gap = {std::numeric_limits<double>::infinity(), dual, std::numeric_limits<double>::infinity(), false};
            return res;
        }
        res.fraction = 0.0;
        res.optimal_residual = er.status == exact_status::optimal;
        return finish(er.assignment);
    }

}
