#include "cartan/expr.hpp"

#include <cctype>

namespace cartan {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

bool scalar_only(const GenComb& c)
{
    for (const auto& kv : c)
        if (!kv.first.is_unit())
            return false;
    return true;
}

RatFun scalar_value(const GenComb& c)
{
    auto it = c.find(GenJet::unit());
    return it == c.end() ? RatFun() : it->second;
}

class Parser {
public:
    Parser(const std::string& s, const KeyResolver& keys) : s_(s), keys_(keys) {}

    GenComb parse()
    {
        GenComb r = expr();
        skip();
        if (pos_ != s_.size())
            throw ParseError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
        return r;
    }

private:
    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }
    bool eat(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    GenComb expr()
    {
        GenComb r = term();
        for (;;) {
            if (eat('+'))
                r = r + term();
            else if (eat('-'))
                r = r - term();
            else
                return r;
        }
    }

    GenComb term()
    {
        GenComb r = unary();
        for (;;) {
            skip();
            std::size_t at = pos_;
            if (eat('*')) {
                GenComb b = unary();
                if (scalar_only(r))
                    r = scale(b, scalar_value(r));
                else if (scalar_only(b))
                    r = scale(r, scalar_value(b));
                else
                    throw ParseError("product of two key symbols is not linear", at);
            } else if (eat('/')) {
                GenComb b = unary();
                if (!scalar_only(b))
                    throw ParseError("division by a key symbol", at);
                RatFun d = scalar_value(b);
                if (d.is_zero())
                    throw ParseError("division by zero", at);
                r = scale(r, RatFun(1) / d);
            } else {
                return r;
            }
        }
    }

    GenComb unary()
    {
        if (eat('-'))
            return scale(unary(), RatFun(-1));
        if (eat('+'))
            return unary();
        return power();
    }

    GenComb power()
    {
        GenComb base = atom();
        skip();
        std::size_t at = pos_;
        if (!eat('^'))
            return base;
        skip();
        bool neg = eat('-');
        skip();
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
        if (start == pos_)
            throw ParseError("expected integer exponent", pos_);
        int e = std::stoi(s_.substr(start, pos_ - start));
        if (!scalar_only(base))
            throw ParseError("power of a key symbol is not linear", at);
        RatFun v = scalar_value(base);
        if (neg) {
            if (v.is_zero())
                throw ParseError("division by zero", at);
            v = RatFun(1) / v;
        }
        return single(GenJet::unit(), v.pow(e));
    }

    GenComb atom()
    {
        skip();
        if (pos_ >= s_.size())
            throw ParseError("unexpected end of expression", pos_);
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            GenComb r = expr();
            if (!eat(')'))
                throw ParseError("expected ')'", pos_);
            return r;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            if (pos_ < s_.size() && s_[pos_] == '.')
                throw ParseError("decimal literals are not exact; use a fraction", pos_);
            return single(GenJet::unit(), RatFun(Rational(s_.substr(start, pos_ - start))));
        }
        if (ident_start(c)) {
            std::size_t start = pos_;
            while (pos_ < s_.size()) {
                if (ident_char(s_[pos_])) {
                    ++pos_;
                } else if (s_[pos_] == '^' && pos_ + 1 < s_.size() && ident_start(s_[pos_ + 1])) {
                    ++pos_;
                } else {
                    break;
                }
            }
            std::string name = s_.substr(start, pos_ - start);
            if (keys_) {
                if (auto k = keys_(name, start))
                    return single(*k);
            }
            return single(GenJet::unit(), RatFun::variable(name));
        }
        throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
    }

    const std::string& s_;
    const KeyResolver& keys_;
    std::size_t pos_ = 0;
};

} // namespace

GenComb parse_linear(const std::string& text, const KeyResolver& keys)
{
    return Parser(text, keys).parse();
}

RatFun parse_ratfun(const std::string& text)
{
    KeyResolver none;
    GenComb c = Parser(text, none).parse();
    return scalar_value(c);
}

bool is_identifier(const std::string& s)
{
    if (s.empty() || !ident_start(s[0]))
        return false;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (ident_char(s[i]))
            continue;
        if (s[i] == '^' && i + 1 < s.size() && ident_start(s[i + 1]))
            continue;
        return false;
    }
    return true;
}

} // namespace cartan
