#include <bddmatch/coarse_to_fine.hpp>
#include <bddmatch/shapes.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace bddmatch;

namespace {

    feature_matrix positions(const mesh& m)
    {
        feature_matrix f;
        for(const vec3& p : m.vertices()) f.push_back({p[0], p[1], p[2]});
        return f;
    }

    resolution_level flat(const mesh& m)
    {
        std::vector<std::uint32_t> id(m.nr_vertices());
        std::iota(id.begin(), id.end(), 0u);
        return {m, id};
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> identity_pairs(std::size_t n)
    {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
        for(std::uint32_t v = 0; v < n; ++v) out.emplace_back(v, v);
        return out;
    }

    // icosphere(level) and a jittered copy whose coarse level shares the surviving vertices
    struct sphere_pair {
        std::vector<resolution_level> m, n;
        std::vector<feature_matrix> fm, fn;
    };

    sphere_pair make_pair(int coarse_level, unsigned seed, double jitter)
    {
        std::mt19937 rng(seed);
        const mesh a0 = coarse_level == 0 ? shapes::icosahedron() : shapes::icosphere(coarse_level);
        const mesh a1 = shapes::icosphere(coarse_level + 1);
        const mesh b1 = shapes::jittered(a1, jitter, rng);
        const mesh b0(std::vector<vec3>(b1.vertices().begin(), b1.vertices().begin() + static_cast<std::ptrdiff_t>(a0.nr_vertices())),
                      a0.triangles());
        sphere_pair p;
        p.m = {{a0, {}}, {a1, nearest_vertex_map(a1, a0)}};
        p.n = {{b0, {}}, {b1, nearest_vertex_map(b1, b0)}};
        p.fm = {positions(a0), positions(a1)};
        p.fn = {positions(b0), positions(b1)};
        return p;
    }

}

TEST(ResolutionLevel, Validation)
{
    const mesh t = shapes::tetrahedron();
    EXPECT_NO_THROW((resolution_level{t, {0, 1, 2, 3}}).validate(4));
    EXPECT_THROW((resolution_level{t, {0, 1, 2}}).validate(4), error);
    EXPECT_THROW((resolution_level{t, {0, 1, 2, 4}}).validate(4), error);
}

TEST(NearestVertexMap, IcosphereKeepsCoarseVertices)
{
    const mesh a0 = shapes::icosahedron(), a1 = shapes::icosphere(1);
    const auto map = nearest_vertex_map(a1, a0);
    for(std::uint32_t v = 0; v < a0.nr_vertices(); ++v) EXPECT_EQ(map[v], v);
    for(std::uint32_t v = 0; v < a1.nr_vertices(); ++v) EXPECT_LT(map[v], a0.nr_vertices());
}

TEST(AllowedPairs, IdentityContainsDiagonal)
{
    const auto p = make_pair(0, 1, 0.0);
    const auto allowed = allowed_pairs(identity_pairs(12), p.m[1], p.n[1], 2);
    for(std::uint32_t v = 0; v < p.m[1].shape.nr_vertices(); ++v) EXPECT_TRUE(allowed.contains(v, v));
}

TEST(AllowedPairs, SingleMatchRingOne)
{
    const mesh m = shapes::icosphere(1);
    const std::vector<std::pair<std::uint32_t, std::uint32_t>> one{{3, 17}};
    const auto allowed = allowed_pairs(one, flat(m), flat(m), 1);
    const auto rm = m.neighbourhood({3}, 1), rn = m.neighbourhood({17}, 1);
    EXPECT_EQ(allowed.size(), rm.size() * rn.size());
    for(auto a : rm)
        for(auto b : rn) EXPECT_TRUE(allowed.contains(a, b));
}

TEST(AllowedPairs, GrowsWithRing)
{
    const auto p = make_pair(0, 2, 0.1);
    const std::vector<std::pair<std::uint32_t, std::uint32_t>> some{{0, 0}, {4, 5}, {9, 2}};
    std::size_t prev = 0;
    for(int ring = 0; ring <= 4; ++ring) {
        const auto allowed = allowed_pairs(some, p.m[1], p.n[1], ring);
        EXPECT_GE(allowed.size(), prev);
        prev = allowed.size();
    }
    EXPECT_THROW(allowed_pairs({}, p.m[1], p.n[1], 2), error);
}

TEST(AllowedPairs, AnchorsAreAllPreimages)
{
    // two fine vertices projecting to the same coarse vertex both act as anchors
    const mesh m = shapes::octahedron();
    resolution_level level{m, {0, 0, 1, 1, 1, 1}};
    const std::vector<std::pair<std::uint32_t, std::uint32_t>> one{{0, 0}};
    const auto allowed = allowed_pairs(one, level, level, 0);
    EXPECT_EQ(allowed.size(), 4u);
    EXPECT_TRUE(allowed.contains(0, 1));
    EXPECT_TRUE(allowed.contains(1, 0));
}

TEST(PruneProductSpace, AllPairsIsIdentity)
{
    const mesh a = shapes::octahedron();
    const auto sp = build_shape_problem(a, a, positions(a), positions(a));
    const auto pruned = prune_product_space(sp.space, pair_set::all(6, 6), a, a);
    ASSERT_EQ(pruned.space.size(), sp.space.size());
    EXPECT_EQ(pruned.space.costs, sp.space.costs);
    ASSERT_EQ(pruned.ilp.instance.nr_constraints(), sp.ilp.instance.nr_constraints());
    for(std::size_t j = 0; j < sp.ilp.instance.nr_constraints(); ++j)
        EXPECT_EQ(*pruned.ilp.instance.constraints()[j].row, *sp.ilp.instance.constraints()[j].row);
}

TEST(PruneProductSpace, SinglePairIsInfeasible)
{
    const mesh a = shapes::octahedron();
    const auto sp = build_shape_problem(a, a, positions(a), positions(a));
    pair_set one(6, 6);
    one.insert(0, 0);
    EXPECT_THROW(prune_product_space(sp.space, one, a, a), pruned_infeasible);
}

TEST(PruneProductSpace, OctahedronIdentityRingTwoKeepsOptimum)
{
    const mesh a = shapes::octahedron();
    std::mt19937 rng(4);
    const mesh b = shapes::jittered(a, 0.1, rng);
    const auto sp = build_shape_problem(a, b, positions(a), positions(b));
    const auto allowed = allowed_pairs(identity_pairs(6), flat(a), flat(b), 2);
    const auto pruned = prune_product_space(sp.space, allowed, a, b);
    EXPECT_NEAR(exact_solve(pruned.ilp.instance).objective, exact_solve(sp.ilp.instance).objective, 1e-9);
}

TEST(PruneProductSpace, SoundAndNeverBetter)
{
    const mesh a = shapes::tetrahedron();
    std::mt19937 rng(9);
    const mesh b = shapes::jittered(a, 0.15, rng);
    feature_matrix fb = positions(b);
    for(auto& row : fb) row[0] = -row[0];
    const auto sp = build_shape_problem(a, b, positions(a), fb);
    const double full = exact_solve(sp.ilp.instance).objective;
    const auto allowed = allowed_pairs(identity_pairs(4), flat(a), flat(b), 0);
    const auto pruned = prune_product_space(sp.space, allowed, a, b);
    EXPECT_LT(pruned.space.size(), sp.space.size());
    const auto r = exact_solve(pruned.ilp.instance);
    ASSERT_TRUE(r.has_solution);
    EXPECT_GE(r.objective, full - 1e-9);
    std::vector<char> lifted(sp.space.size(), 0);
    for(std::size_t k = 0; k < pruned.original_index.size(); ++k) lifted[pruned.original_index[k]] = r.assignment[k];
    EXPECT_TRUE(verify_solution(lifted, sp.ilp).ok());
    EXPECT_NEAR(sp.ilp.instance.objective(lifted), r.objective, 1e-9);
}

TEST(PruneProductSpace, FilterDuringEnumerationMatchesPruning)
{
    const mesh a = shapes::icosahedron();
    const auto allowed = allowed_pairs(identity_pairs(12), flat(a), flat(a), 1);
    const auto full = enumerate_product_triangles(a, a);
    const auto pruned = prune_product_space(full, allowed, a, a);
    const auto direct = enumerate_product_triangles(a, a, allowed.filter());
    ASSERT_EQ(direct.size(), pruned.space.size());
    for(std::size_t p = 0; p < direct.size(); ++p) EXPECT_EQ(direct.triangles[p].key(), pruned.space.triangles[p].key());
}

TEST(RunHierarchy, SingleLevelEqualsPlainSolve)
{
    const mesh a = shapes::octahedron();
    std::mt19937 rng(6);
    const mesh b = shapes::jittered(a, 0.2, rng);
    const auto res = run_hierarchy({{a, {}}}, {{b, {}}}, {positions(a)}, {positions(b)});
    ASSERT_EQ(res.levels.size(), 1u);
    const auto sp = build_shape_problem(a, b, positions(a), positions(b));
    const auto plain = solve(sp.ilp.instance);
    EXPECT_EQ(res.levels[0].solve.gap.primal, plain.gap.primal);
    EXPECT_EQ(res.levels[0].solve.assignment, plain.assignment);
    EXPECT_EQ(res.levels[0].ring, 0);
}

TEST(RunHierarchy, TwoLevelsCertifiedAgainstOracle)
{
    const auto p = make_pair(0, 3, 0.1);
    const auto res = run_hierarchy(p.m, p.n, p.fm, p.fn);
    ASSERT_EQ(res.levels.size(), 2u);
    const auto coarse = build_shape_problem(p.m[0].shape, p.n[0].shape, p.fm[0], p.fn[0]);
    EXPECT_NEAR(res.levels[0].solve.gap.primal, exact_solve(coarse.ilp.instance).objective, 1e-6);
    for(const auto& l : res.levels) {
        EXPECT_TRUE(l.solve.gap.certified) << "level " << l.level;
        EXPECT_EQ(l.match.point_map.size(), (l.level == 0 ? p.m[0] : p.m[1]).shape.nr_vertices());
    }
    EXPECT_EQ(res.levels[1].ring, 2);
    EXPECT_LT(res.levels[1].nr_allowed_pairs, p.m[1].shape.nr_vertices() * p.n[1].shape.nr_vertices());
    // a certified fine level is optimal on the pruned space; check the certificate itself
    const auto allowed = allowed_pairs(res.levels[0].match.pairs, p.m[1], p.n[1], 2);
    const auto fine = build_shape_problem(p.m[1].shape, p.n[1].shape, p.fm[1], p.fn[1], allowed.filter());
    ASSERT_EQ(fine.ilp.instance.nr_variables(), res.levels[1].nr_variables);
    EXPECT_TRUE(verify_solution(res.levels[1].solve.assignment, fine.ilp).ok());
    EXPECT_NEAR(fine.ilp.instance.objective(res.levels[1].solve.assignment), res.levels[1].solve.gap.primal, 1e-9);
    EXPECT_LE(res.levels[1].solve.best_dual, res.levels[1].solve.gap.primal + 1e-9);
    for(std::uint32_t v = 0; v < p.m[1].shape.nr_vertices(); ++v) EXPECT_EQ(res.final_matching().point_map[v], v);
}

TEST(RunHierarchy, ErrorsNameTheLevel)
{
    const auto p = make_pair(0, 5, 0.1);
    auto bad = p.m;
    bad[1].to_coarser.pop_back();
    try {
        run_hierarchy(bad, p.n, p.fm, p.fn);
        FAIL() << "expected hierarchy_error";
    } catch(const hierarchy_error& e) {
        EXPECT_EQ(e.level(), 1u);
        EXPECT_FALSE(e.infeasible());
    }
    EXPECT_THROW(run_hierarchy(p.m, {p.n[0]}, p.fm, p.fn), error);
}
