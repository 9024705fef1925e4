#include "doctest.h"

#include "cartan/expr.hpp"
#include "cartan/groupjets.hpp"

using namespace cartan;

namespace {

RatFun V(const char* n) { return RatFun::variable(n); }

std::shared_ptr<DeterminingSystem> make_system(std::vector<std::string> ambient,
                                               std::vector<DeterminingSystem::Generator> gens,
                                               std::vector<std::string> rels)
{
    auto sys = std::make_shared<DeterminingSystem>(std::move(ambient), std::move(gens));
    KeyResolver keys = [&](const std::string& n, std::size_t) -> std::optional<GenJet> {
        GenJet j;
        if (sys->parse_jet(n, j))
            return j;
        return std::nullopt;
    };
    for (const auto& r : rels) {
        auto eq = r.find('=');
        sys->add_relation(parse_linear(r.substr(0, eq), keys) - parse_linear(r.substr(eq + 1), keys));
    }
    return sys;
}

GenComb lifted(const DeterminingSystem& sys, const std::string& s)
{
    KeyResolver keys = [&](const std::string& n, std::size_t) -> std::optional<GenJet> {
        GenJet j;
        if (sys.parse_lifted(n, j))
            return j;
        return std::nullopt;
    };
    auto eq = s.find('=');
    return parse_linear(s.substr(0, eq), keys) - parse_linear(s.substr(eq + 1), keys);
}

GenComb jet(const DeterminingSystem& sys, const std::string& s)
{
    KeyResolver keys = [&](const std::string& n, std::size_t) -> std::optional<GenJet> {
        GenJet j;
        if (sys.parse_jet(n, j))
            return j;
        return std::nullopt;
    };
    return parse_linear(s, keys);
}

std::vector<DeterminingSystem::Generator> xup_gens()
{
    return {{"xi", {}, "mu^x"}, {"eta", {}, "mu^u"}, {"alpha", {}, "mu^p"}, {"gamma", {}, "mu^q"}};
}

const char* kAlphaAsPrinted = "alpha = eta_x + p*(eta_u - xi_x) + p^2*xi_u";
const char* kAlpha = "alpha = eta_x + p*(eta_u - xi_x) - p^2*xi_u";
const char* kGamma = "gamma = alpha_x + p*alpha_u + q*alpha_p - q*(xi_x + p*xi_u + q*xi_p)";

std::shared_ptr<DeterminingSystem> contact(const char* alpha = kAlpha)
{
    return make_system({"x", "u", "p", "q"}, xup_gens(),
                       {"xi_q = 0", "eta_q = 0", "alpha_q = 0", "eta_p = p*xi_p", alpha, kGamma});
}

std::shared_ptr<DeterminingSystem> point()
{
    return make_system({"x", "u", "p", "q"},
                       {{"xi", {}, "mu"}, {"eta", {}, "nu"}, {"alpha", {}, "mu^p"}, {"gamma", {}, "mu^q"}},
                       {"xi_p = 0", "eta_p = 0", "xi_q = 0", "eta_q = 0", "alpha_q = 0", kAlpha, kGamma});
}

} // namespace

TEST_CASE("contact determining system normal forms")
{
    auto sys = contact();
    CHECK(sys->normal_form(GenJet{1, MultiIndex{0, 0, 2, 0}}) == jet(*sys, "p*xi_p2 + xi_p"));
    CHECK(sys->normal_form(GenJet{2, MultiIndex{0, 0, 0, 1}}).empty());
    auto basis = sys->parametric_up_to(1);
    std::vector<std::string> names;
    for (auto& j : basis)
        names.push_back(sys->jet_name(j));
    CHECK(names == std::vector<std::string>{"xi", "eta", "xi_x", "xi_u", "xi_p", "eta_x", "eta_u"});
    CHECK(sys->check_integrability(4).ok);
    auto pt = point();
    CHECK(pt->check_integrability(4).ok);
    CHECK(pt->normal_form(GenJet{3, MultiIndex(4)}) ==
          jet(*pt, "eta_x2 + p*(2*eta_ux - xi_x2) + p^2*(eta_u2 - 2*xi_ux) - p^3*xi_u2 + q*(eta_u - 2*xi_x) - 3*p*q*xi_u"));
}

TEST_CASE("prolonged determining system")
{
    auto sys = contact();
    auto p2 = prolong_determining_system(*sys, 2);
    bool found = false;
    for (auto& [j, rel] : p2.relations)
        if (sys->jet_name(j) == "eta_p2") {
            CHECK(rel == jet(*sys, "eta_p2 - p*xi_p2 - xi_p"));
            found = true;
        }
    CHECK(found);
    auto p3 = prolong_determining_system(*sys, 3);
    std::vector<std::pair<GenJet, GenComb>> proj;
    for (auto& r : p3.relations)
        if (r.first.order() <= 2)
            proj.push_back(r);
    CHECK(proj == p2.relations);
    CHECK(p3.integrability.ok);

    auto trivial = make_system({"x", "u"}, {{"xi", {}, "mu"}, {"eta", {}, "nu"}}, {});
    CHECK(prolong_determining_system(*trivial, 3).relations.empty());
}

TEST_CASE("integrability findings are reported")
{
    auto sys = make_system({"x", "y"}, {{"f", {}, "mu"}}, {"f_x = y*f", "f_y = 0"});
    auto r = sys->check_integrability(2);
    CHECK_FALSE(r.ok);
    CHECK(r.findings.size() == 1);
}

TEST_CASE("lift of the contact and point systems")
{
    auto sys = contact();
    auto mc = lift_system(sys);
    REQUIRE(mc.relations().size() == 6);
    CHECK(mc.relations()[0] == lifted(*sys, "mu^x_Q = 0"));
    CHECK(mc.relations()[3] == lifted(*sys, "mu^u_P = P*mu^x_P"));
    CHECK(mc.relations()[4] == lifted(*sys, "mu^p = mu^u_X + P*(mu^u_U - mu^x_X) - P^2*mu^x_U"));
    CHECK(mc.relations()[5] ==
          lifted(*sys, "mu^q = mu^p_X + P*mu^p_U + Q*mu^p_P - Q*(mu^x_X + P*mu^x_U + Q*mu^x_P)"));

    auto printed = contact(kAlphaAsPrinted);
    CHECK(lift_system(printed).relations()[4] ==
          lifted(*printed, "mu^p = mu^u_X + P*(mu^u_U - mu^x_X) + P^2*mu^x_U"));

    // instantiating Z -> z recovers the input system
    for (std::size_t i = 0; i < mc.relations().size(); ++i)
        CHECK(map_coefficients(mc.relations()[i], [&](const RatFun& f) { return mc.to_source(f); }) ==
              sys->input_relations()[i]);

    auto pt = point();
    auto pmc = lift_system(pt);
    CHECK(pmc.relations()[0] == lifted(*pt, "mu_P = 0"));
    CHECK(pmc.relations()[1] == lifted(*pt, "nu_P = 0"));
    std::vector<std::string> names;
    for (auto& j : pmc.basis(2))
        names.push_back(pt->lifted_name(j));
    CHECK(names == std::vector<std::string>{"mu", "nu", "mu_X", "mu_U", "nu_X", "nu_U", "mu_X2", "mu_UX",
                                            "mu_U2", "nu_X2", "nu_UX", "nu_U2"});

    auto empty = make_system({"x", "u"}, {{"xi", {}, "mu"}, {"eta", {}, "nu"}}, {});
    CHECK(lift_system(empty).basis(1).size() == 6);
}

TEST_CASE("prolonged action")
{
    JetSpec s({"x"}, {"u"});
    auto id = prolonged_action(GroupJetFrame::identity(s), s, 3);
    for (auto& [k, v] : id)
        CHECK(v == RatFun::variable(s.u(k.first, MultiIndex(k.second))));

    auto fc = s.add_family("chi", {s.x(0), s.u(0)});
    auto fp = s.add_family("psi", {s.x(0), s.u(0)});
    GroupJetFrame pf;
    RatFun chi = RatFun::variable(s.family(fc, MultiIndex(2)));
    RatFun psi = RatFun::variable(s.family(fp, MultiIndex(2)));
    pf.targets = {chi, psi};
    auto act = prolonged_action(pf, s, 1);
    CHECK(act.at({0, {1}}) == s.total_derivative(psi, 0) / s.total_derivative(chi, 0));

    // contact frame: X, U, P prescribed as functions of (x, u, p)
    JetSpec c({"x"}, {"u"});
    Var p = c.u(0, MultiIndex{1});
    auto kc = c.add_family("chi", {c.x(0), c.u(0), p});
    auto kp = c.add_family("psi", {c.x(0), c.u(0), p});
    auto kb = c.add_family("beta", {c.x(0), c.u(0), p});
    GroupJetFrame cf;
    cf.targets = {RatFun::variable(c.family(kc, MultiIndex(3))), RatFun::variable(c.family(kp, MultiIndex(3)))};
    RatFun beta = RatFun::variable(c.family(kb, MultiIndex(3)));
    cf.overrides[{0, {1}}] = beta;
    auto ca = prolonged_action(cf, c, 2);
    RatFun pv = RatFun::variable(p), qv = RatFun::variable(c.u(0, MultiIndex{2}));
    auto F = [&](std::size_t f, MultiIndex B) { return RatFun::variable(c.family(f, B)); };
    CHECK(ca.at({0, {2}}) == (F(kb, {1, 0, 0}) + pv * F(kb, {0, 1, 0}) + qv * F(kb, {0, 0, 1})) /
                                 (F(kc, {1, 0, 0}) + pv * F(kc, {0, 1, 0}) + qv * F(kc, {0, 0, 1})));
}

TEST_CASE("characteristic and generator prolongation")
{
    JetSpec s({"x"}, {"u"});
    RatFun ux = RatFun::variable(s.u(0, MultiIndex{1})), uxx = RatFun::variable(s.u(0, MultiIndex{2}));
    auto du = characteristic(s, InfinitesimalGenerator::concrete({RatFun(0), RatFun(1)}));
    CHECK(du[0] == single(GenJet::unit()));
    auto dx = characteristic(s, InfinitesimalGenerator::concrete({RatFun(1), RatFun(0)}));
    CHECK(dx[0] == single(GenJet::unit(), -ux));

    auto sys = make_system({"x", "u"}, {{"xi", {}, "mu"}, {"eta", {}, "nu"}}, {});
    GeneratorProlongation pr(s, InfinitesimalGenerator::symbolic(*sys), sys.get());
    CHECK(pr.characteristic(0) == jet(*sys, "eta - u_x*xi"));
    CHECK(pr.phi(0, MultiIndex{1}) == jet(*sys, "eta_x + (eta_u - xi_x)*u_x - xi_u*u_x^2"));
    CHECK(pr.phi(0, MultiIndex{2}) ==
          jet(*sys, "eta_x2 + u_x*(2*eta_ux - xi_x2) + u_x^2*(eta_u2 - 2*xi_ux) - u_x^3*xi_u2 + "
                    "u_x2*(eta_u - 2*xi_x) - 3*u_x*u_x2*xi_u"));

    GeneratorProlongation scaling(s, InfinitesimalGenerator::concrete({V("x"), RatFun(0)}));
    CHECK(scaling.phi(0, MultiIndex{1}) == single(GenJet::unit(), -ux));
    CHECK(scaling.phi(0, MultiIndex{2}) == single(GenJet::unit(), RatFun(-2) * uxx));
}

TEST_CASE("generator prolongation agrees with one-parameter flows")
{
    JetSpec s({"x"}, {"u"});
    Var eps = intern("eps");
    RatFun e = RatFun::variable(eps), x = V("x"), u = V("u");
    struct Flow {
        std::vector<RatFun> gen, targets;
    };
    std::vector<Flow> flows = {
        {{RatFun(1), RatFun(0)}, {x + e, u}},
        {{RatFun(0), RatFun(1)}, {x, u + e}},
        {{x, RatFun(0)}, {(RatFun(1) + e) * x, u}},
        {{RatFun(0), u}, {x, (RatFun(1) + e) * u}},
        {{RatFun(0), x}, {x, u + e * x}},
    };
    for (auto& f : flows) {
        GroupJetFrame fr;
        fr.targets = f.targets;
        auto act = prolonged_action(fr, s, 3);
        GeneratorProlongation pr(s, InfinitesimalGenerator::concrete(f.gen));
        for (int n = 0; n <= 3; ++n) {
            MultiIndex J{n};
            RatFun d = act.at({0, J.c}).derivative(eps).substitute(eps, RatFun(0));
            CHECK(single(GenJet::unit(), d) == pr.phi(0, J));
        }
    }
}
