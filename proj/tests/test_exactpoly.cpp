#include <gtest/gtest.h>

#include "nqbfv/even_poly.hpp"
#include "nqbfv/parser.hpp"
#include "test_support.hpp"

using namespace nqbfv;
using nqbfv::testing::names;
using nqbfv::testing::RandomPolys;

TEST(Rat, AlwaysReduced)
{
    Rat q = make_rat(6, -4);
    EXPECT_EQ(q.get_num(), -3);
    EXPECT_EQ(q.get_den(), 2);
    EXPECT_EQ(make_rat(0, 7).get_den(), 1);
    EXPECT_THROW(make_rat(1, 0), std::domain_error);
    EXPECT_EQ(parse_rat("-10/4"), make_rat(-5, 2));
}

TEST(ParsePoly, Zero)
{
    EvenPoly p = parse_poly("0", names({"x1"}));
    EXPECT_TRUE(p.is_zero());
    EXPECT_EQ(p.nvars(), 1u);
}

TEST(ParsePoly, RationalCoefficients)
{
    auto env = names({"x1", "x2"});
    EvenPoly p = parse_poly("3/2*x1^2*x2 - x2", env);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p.coefficient({2, 1}), make_rat(3, 2));
    EXPECT_EQ(p.coefficient({0, 1}), Rat(-1));
    std::vector<Rat> at{Rat(2), Rat(3)};
    EXPECT_EQ(p.eval(at), Rat(15));
}

TEST(ParsePoly, SyntaxErrorAtEnd)
{
    try {
        parse_poly("x1 + ", names({"x1"}));
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 5u);
        EXPECT_NE(std::string(e.what()).find("end of input"), std::string::npos);
    }
}

TEST(ParsePoly, Errors)
{
    auto env = names({"x", "y"});
    EXPECT_THROW(parse_poly("z + 1", env), ParseError);
    EXPECT_THROW(parse_poly("x^-1", env), ParseError);
    EXPECT_THROW(parse_poly("x^1.5", env), ParseError);
    EXPECT_THROW(parse_poly("x/y", env), ParseError);
    EXPECT_THROW(parse_poly("2x", env), ParseError);
    EXPECT_THROW(parse_poly("(x + y", env), ParseError);
    EXPECT_THROW(parse_poly("1/0", env), ParseError);
    EXPECT_THROW(parse_poly("x", {}), std::invalid_argument);
    EXPECT_THROW(parse_poly("x", names({"x", "x"})), std::invalid_argument);
    try {
        parse_poly("x + qq", env);
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 4u);
    }
}

TEST(ParsePoly, Precedence)
{
    auto env = names({"x", "y"});
    EXPECT_EQ(parse_poly("-x^2", env), -parse_poly("x*x", env));
    EXPECT_EQ(parse_poly("(x+y)^2", env), parse_poly("x^2 + 2*x*y + y^2", env));
    EXPECT_EQ(parse_poly("2 - 3 - 4", env), EvenPoly(2, Rat(-5)));
    EXPECT_EQ(parse_poly("x*(1/2)*2", env), parse_poly("x", env));
}

TEST(PolyDiff, PowerRule)
{
    auto env = names({"x1", "x2"});
    EXPECT_EQ(poly_diff(parse_poly("x1^2*x2", env), 0), parse_poly("2*x1*x2", env));
    EXPECT_TRUE(poly_diff(parse_poly("x1", env), 1).is_zero());
    EvenPoly d = poly_diff(parse_poly("3/2*x1^2*x2 - x2", env), 0);
    EXPECT_EQ(d, parse_poly("3*x1*x2", env));
    std::vector<Rat> one{Rat(1), Rat(1)};
    EXPECT_EQ(d.eval(one), Rat(3));
}

TEST(PolyEval, Examples)
{
    auto env = names({"x1", "x2"});
    std::vector<Rat> pt{Rat(2), Rat(3)};
    EXPECT_EQ(poly_eval(parse_poly("x1^2 + x2", env), pt), Rat(7));
    EXPECT_EQ(poly_eval(EvenPoly(2), pt), Rat(0));
    std::vector<Rat> three{Rat(3)};
    EXPECT_EQ(poly_eval(parse_poly("1/3*x1", names({"x1"})), three), Rat(1));
    std::vector<Rat> wrong{Rat(1)};
    EXPECT_THROW(poly_eval(parse_poly("x1", env), wrong), std::invalid_argument);
}

TEST(EvenPolyProperties, RingAxiomsAndLeibniz)
{
    RandomPolys gen(101);
    for (int trial = 0; trial < 60; ++trial) {
        EvenPoly p = gen.even(3, 3, 4), q = gen.even(3, 3, 4), r = gen.even(3, 2, 3);
        EXPECT_EQ((p + q) * r, p * r + q * r);
        EXPECT_EQ(p * q, q * p);
        EXPECT_EQ((p * q) * r, p * (q * r));
        for (std::size_t v = 0; v < 3; ++v) EXPECT_EQ((p * q).diff(v), p.diff(v) * q + p * q.diff(v));
        auto pt = gen.point(3);
        EXPECT_EQ((p * q).eval(pt), p.eval(pt) * q.eval(pt));
        EXPECT_EQ((p + q).eval(pt), p.eval(pt) + q.eval(pt));
    }
}

TEST(EvenPolyProperties, ParsePrintRoundTrip)
{
    RandomPolys gen(7);
    auto env = names({"a", "b", "c"});
    for (int trial = 0; trial < 80; ++trial) {
        EvenPoly p = gen.even(3, 4, 6);
        std::string text = p.to_string(env);
        EXPECT_EQ(parse_poly(text, env), p) << text;
        EXPECT_EQ(parse_poly(text, env).to_string(env), text);
    }
}

TEST(EvenPoly, CanonicalPrinting)
{
    auto env = names({"x1", "x2"});
    EXPECT_EQ(parse_poly("- x2 + 3/2*x2*x1*x1", env).to_string(env), "3/2*x1^2*x2 - x2");
    EXPECT_EQ(parse_poly("x2 + x1", env).to_string(env), "x1 + x2");
    EXPECT_EQ(parse_poly("0*x1 - 1", env).to_string(env), "-1");
}

TEST(EvenPoly, Determinant)
{
    auto env = names({"x"});
    Matrix<EvenPoly> m{{parse_poly("1", env), parse_poly("0", env)}, {parse_poly("x", env), parse_poly("1", env)}};
    EXPECT_EQ(determinant(m, 1), EvenPoly(1, Rat(1)));
    Matrix<EvenPoly> s{{parse_poly("x", env), parse_poly("x^2", env)}, {parse_poly("1", env), parse_poly("x", env)}};
    EXPECT_TRUE(determinant(s, 1).is_zero());
}

TEST(EvenPoly, MonomialEnumeration)
{
    EXPECT_EQ(monomials_up_to(2, 2).size(), 6u);
    EXPECT_EQ(monomials_up_to(3, 1).size(), 4u);
    EXPECT_TRUE(monomials_up_to(2, -1).empty());
}
