#pragma once

#include <cctype>
#include <stdexcept>
#include <string>

namespace costar {

// Small recursive-descent parser shared by every expression-valued input
// surface (rational functions on the chart, phase-space polynomials, ...).
//
// Grammar (whitespace-insensitive):
//   expr    := ['-'] term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := primary ['^' ['-'] integer]
//   primary := '(' expr ')' | integer | identifier
//
// The algebra Alg supplies the value type and atom construction:
//   V from_int(const std::string& digits)
//   V from_symbol(const std::string& name)   (including "i")
// and V supports +, -, *, / and pow(int).
template <class Alg>
class ExprParser {
  public:
    using V = typename Alg::value_type;

    ExprParser(const Alg& alg, std::string text) : alg_(alg), text_(std::move(text)) {}

    V parse() {
        V v = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing input");
        return v;
    }

  private:
    const Alg& alg_;
    std::string text_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& why) {
        throw std::invalid_argument("parse error at offset " + std::to_string(pos_) + ": " + why);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    V expr() {
        bool neg = eat('-');
        V v = term();
        if (neg) v = -v;
        while (true) {
            if (eat('+'))
                v = v + term();
            else if (eat('-'))
                v = v - term();
            else
                return v;
        }
    }

    V term() {
        V v = factor();
        while (true) {
            if (eat('*'))
                v = v * factor();
            else if (eat('/'))
                v = v / factor();
            else
                return v;
        }
    }

    V factor() {
        V v = primary();
        if (eat('^')) {
            bool neg = eat('-');
            std::string digits = integer_token();
            long e = std::stol(digits);
            v = v.pow(int(neg ? -e : e));
        }
        return v;
    }

    std::string integer_token() {
        skip_ws();
        size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ == start) fail("expected integer");
        return text_.substr(start, pos_ - start);
    }

    V primary() {
        skip_ws();
        if (eat('(')) {
            V v = expr();
            if (!eat(')')) fail("expected ')'");
            return v;
        }
        if (pos_ >= text_.size()) fail("unexpected end of input");
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) return alg_.from_int(integer_token());
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            return alg_.from_symbol(text_.substr(start, pos_ - start));
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

}  // namespace costar
