#include <benchmark/benchmark.h>

#include <fstream>
#include <random>
#include <sstream>

#include "cartan/expr.hpp"
#include "cartan/framekit.hpp"
#include "problem.hpp"
#include "run.hpp"

using namespace cartan;

namespace {

std::string fixture(const std::string& name)
{
    std::ifstream in(std::string(CARTAN_FIXTURES) + "/" + name);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void BM_RatFunNormalForm(benchmark::State& state)
{
    RatFun x = RatFun::variable("x"), y = RatFun::variable("y");
    RatFun a = (x + y) * (x - y) * (x * y + RatFun(3));
    RatFun b = (x + y) * (x * x + y + RatFun(1));
    for (auto _ : state)
        benchmark::DoNotOptimize(a / b + b / a);
}
BENCHMARK(BM_RatFunNormalForm);

void BM_OrderedRowEchelon(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> d(-3, 3);
    Matrix<Rational> M(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            M(i, j) = d(rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(ordered_row_echelon(M));
}
BENCHMARK(BM_OrderedRowEchelon)->Arg(8)->Arg(16)->Arg(32);

void BM_DiffeoStructure(benchmark::State& state)
{
    for (auto _ : state)
        benchmark::DoNotOptimize(diffeo_structure_equations(static_cast<int>(state.range(0)), 4));
}
BENCHMARK(BM_DiffeoStructure)->Arg(2)->Arg(3);

void BM_UniversalNormalize(benchmark::State& state)
{
    auto m = cli::build_model(cli::parse_problem(fixture("universal.prob")));
    for (auto _ : state)
        benchmark::DoNotOptimize(m.frame->normalize(m.section, NormalizeOptions{5}));
}
BENCHMARK(BM_UniversalNormalize)->Unit(benchmark::kMillisecond);

void BM_ContactCartanTest(benchmark::State& state)
{
    cli::Options opt;
    opt.priority = "u,p,x,q";
    auto text = fixture("contact.prob");
    for (auto _ : state)
        benchmark::DoNotOptimize(cli::run_text(text, "cartan-test", opt));
}
BENCHMARK(BM_ContactCartanTest)->Unit(benchmark::kMillisecond);

void BM_AnnihilatorOrder2(benchmark::State& state)
{
    auto m = cli::build_model(cli::parse_problem(fixture("contact.prob")));
    for (auto _ : state)
        benchmark::DoNotOptimize(m.frame->isotropy_annihilator(m.section, 2));
}
BENCHMARK(BM_AnnihilatorOrder2)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
