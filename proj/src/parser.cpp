#include "claw/parser.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace claw {

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
    Tok kind;
    std::string text;
    int line;
    int column;
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token next() {
        Token t = current_;
        advance();
        return t;
    }

  private:
    void advance() {
        skip_space_and_comments();
        current_.line = line_;
        current_.column = col_;
        if (pos_ >= text_.size()) {
            current_.kind = Tok::End;
            current_.text.clear();
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                take();
            current_.kind = Tok::Ident;
            current_.text = text_.substr(start, pos_ - start);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                take();
            if (pos_ < text_.size() && text_[pos_] == '.') {
                take();
                while (pos_ < text_.size() &&
                       std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    take();
            }
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                std::size_t save = pos_;
                take();
                if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) take();
                if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    while (pos_ < text_.size() &&
                           std::isdigit(static_cast<unsigned char>(text_[pos_])))
                        take();
                } else {
                    pos_ = save; // bare ident 'e...' after a number is a new token
                }
            }
            current_.kind = Tok::Number;
            current_.text = text_.substr(start, pos_ - start);
            return;
        }
        current_.kind = Tok::Punct;
        current_.text = std::string(1, c);
        take();
    }

    void skip_space_and_comments() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') take();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                take();
            } else {
                break;
            }
        }
    }

    void take() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token current_;
};

class Parser {
  public:
    explicit Parser(const std::string& text) : lex_(text) {}

    SourceSpec parse() {
        SourceSpec spec;
        expect_keyword("system");
        spec.name = expect(Tok::Ident, "system name").text;
        expect_keyword("vars");
        parse_vars(spec);
        expect_punct(";");

        std::unordered_map<std::string, Expr> fluxes;
        std::unordered_map<std::string, Expr> densities;
        std::unordered_set<std::string> law_names;

        while (lex_.peek().kind != Tok::End) {
            Token head = expect(Tok::Ident, "declaration");
            if (head.text == "flux" || head.text == "density") {
                Token var = expect(Tok::Ident, "variable name");
                if (!var_index_.count(var.text))
                    throw ParseError("unknown variable name `" + var.text + "`", var.line,
                                     var.column);
                expect_punct(":");
                Expr e = parse_expr();
                expect_punct(";");
                auto& table = head.text == "flux" ? fluxes : densities;
                if (table.count(var.text))
                    throw ParseError("duplicate " + head.text + " for `" + var.text + "`",
                                     var.line, var.column);
                table.emplace(var.text, e);
            } else if (head.text == "law") {
                Token name = expect(Tok::Ident, "law name");
                if (law_names.count(name.text))
                    throw ParseError("duplicate law name `" + name.text + "`", name.line,
                                     name.column);
                law_names.insert(name.text);
                expect_punct(":");
                Expr density = parse_expr();
                expect_punct("|");
                Expr flux = parse_expr();
                expect_punct(";");
                spec.laws.push_back({name.text, density, flux});
            } else if (head.text == "hamiltonian") {
                if (spec.hamiltonian)
                    throw ParseError("duplicate hamiltonian block", head.line, head.column);
                expect_punct(":");
                Expr h = parse_expr();
                expect_keyword("eta");
                auto rows = parse_matrix();
                expect_punct(";");
                spec.hamiltonian = make_hamiltonian(h, rows, head);
            } else if (head.text == "domain") {
                if (spec.domain)
                    throw ParseError("duplicate domain declaration", head.line, head.column);
                expect_punct("[");
                double lo = parse_signed_number();
                expect_punct(",");
                double hi = parse_signed_number();
                expect_punct("]");
                expect_punct(";");
                if (!(lo < hi))
                    throw ParseError("empty domain interval", head.line, head.column);
                spec.domain = std::make_pair(lo, hi);
            } else {
                throw ParseError("unexpected declaration `" + head.text + "`", head.line,
                                 head.column);
            }
        }

        for (const auto& v : spec.variables) {
            auto it = fluxes.find(v);
            if (it == fluxes.end())
                throw ParseError("missing flux for variable `" + v + "`", 1, 1);
            spec.fluxes.push_back(it->second);
        }
        if (!densities.empty()) {
            if (densities.size() != spec.variables.size())
                throw ParseError("density declared for only part of the variables", 1, 1);
            for (const auto& v : spec.variables) spec.densities.push_back(densities.at(v));
        }
        return spec;
    }

    Expr parse_standalone_expr(const std::vector<std::string>& variables) {
        for (std::size_t i = 0; i < variables.size(); ++i)
            var_index_[variables[i]] = static_cast<int>(i);
        Expr e = parse_expr();
        Token t = lex_.peek();
        if (t.kind != Tok::End)
            throw ParseError("trailing input after expression", t.line, t.column);
        return e;
    }

  private:
    void parse_vars(SourceSpec& spec) {
        while (true) {
            Token v = expect(Tok::Ident, "variable name");
            if (var_index_.count(v.text))
                throw ParseError("duplicate variable name `" + v.text + "`", v.line, v.column);
            var_index_[v.text] = static_cast<int>(spec.variables.size());
            spec.variables.push_back(v.text);
            if (lex_.peek().kind == Tok::Punct && lex_.peek().text == ",") {
                lex_.next();
                continue;
            }
            break;
        }
    }

    // expr := term (("+"|"-") term)*
    Expr parse_expr() {
        Expr e = parse_term();
        while (lex_.peek().kind == Tok::Punct &&
               (lex_.peek().text == "+" || lex_.peek().text == "-")) {
            std::string op = lex_.next().text;
            Expr rhs = parse_term();
            e = fold_binary(op == "+" ? Expr::Kind::Add : Expr::Kind::Sub, e, rhs);
        }
        return e;
    }

    // term := factor (("*"|"/") factor)*
    Expr parse_term() {
        Expr e = parse_factor();
        while (lex_.peek().kind == Tok::Punct &&
               (lex_.peek().text == "*" || lex_.peek().text == "/")) {
            std::string op = lex_.next().text;
            Expr rhs = parse_factor();
            e = fold_binary(op == "*" ? Expr::Kind::Mul : Expr::Kind::Div, e, rhs);
        }
        return e;
    }

    // factor := ("-")? atom ("^" INT)?   -- `^` binds tighter than unary minus
    Expr parse_factor() {
        bool negate = false;
        if (lex_.peek().kind == Tok::Punct && lex_.peek().text == "-") {
            lex_.next();
            negate = true;
        }
        Expr e = parse_atom();
        if (lex_.peek().kind == Tok::Punct && lex_.peek().text == "^") {
            Token caret = lex_.next();
            Token expo = expect(Tok::Number, "integer exponent");
            if (expo.text.find_first_of(".eE") != std::string::npos)
                throw ParseError("exponent must be a non-negative integer", expo.line,
                                 expo.column);
            int k = std::stoi(expo.text);
            (void)caret;
            e = e.is_constant() ? Expr::constant(e.constant_value().pow(k)) : Expr::pow(e, k);
        }
        if (negate) e = e.is_constant() ? Expr::constant(-e.constant_value()) : -e;
        return e;
    }

    Expr parse_atom() {
        Token t = lex_.next();
        if (t.kind == Tok::Number) return Expr::constant(Rational::from_decimal(t.text));
        if (t.kind == Tok::Ident) {
            auto it = var_index_.find(t.text);
            if (it == var_index_.end())
                throw ParseError("unknown variable name `" + t.text + "`", t.line, t.column);
            return Expr::variable(it->second);
        }
        if (t.kind == Tok::Punct && t.text == "(") {
            Expr e = parse_expr();
            expect_punct(")");
            return e;
        }
        throw ParseError("expected a number, variable, or parenthesized expression", t.line,
                         t.column);
    }

    // Constant subexpressions fold to a single rational at parse time, so a
    // printed constant like "-3/2" rebuilds the same node.
    static Expr fold_binary(Expr::Kind k, const Expr& a, const Expr& b) {
        if (a.is_constant() && b.is_constant()) {
            const Rational& x = a.constant_value();
            const Rational& y = b.constant_value();
            switch (k) {
                case Expr::Kind::Add: return Expr::constant(x + y);
                case Expr::Kind::Sub: return Expr::constant(x - y);
                case Expr::Kind::Mul: return Expr::constant(x * y);
                case Expr::Kind::Div:
                    if (!y.is_zero()) return Expr::constant(x / y);
                    break;
                default: break;
            }
        }
        switch (k) {
            case Expr::Kind::Add: return a + b;
            case Expr::Kind::Sub: return a - b;
            case Expr::Kind::Mul: return a * b;
            default: return a / b;
        }
    }

    double parse_signed_number() {
        bool neg = false;
        if (lex_.peek().kind == Tok::Punct && lex_.peek().text == "-") {
            lex_.next();
            neg = true;
        }
        Token t = expect(Tok::Number, "number");
        double v = Rational::from_decimal(t.text).to_double();
        return neg ? -v : v;
    }

    Rational parse_signed_rational() {
        bool neg = false;
        if (lex_.peek().kind == Tok::Punct && lex_.peek().text == "-") {
            lex_.next();
            neg = true;
        }
        Token t = expect(Tok::Number, "number");
        Rational v = Rational::from_decimal(t.text);
        return neg ? -v : v;
    }

    // "[" row (";" row)* "]" with row := number ("," number)*
    std::vector<std::vector<Rational>> parse_matrix() {
        expect_punct("[");
        std::vector<std::vector<Rational>> rows;
        while (true) {
            std::vector<Rational> row;
            row.push_back(parse_signed_rational());
            while (lex_.peek().kind == Tok::Punct && lex_.peek().text == ",") {
                lex_.next();
                row.push_back(parse_signed_rational());
            }
            rows.push_back(std::move(row));
            if (lex_.peek().kind == Tok::Punct && lex_.peek().text == ";") {
                lex_.next();
                continue;
            }
            break;
        }
        expect_punct("]");
        return rows;
    }

    HamiltonianBlock make_hamiltonian(const Expr& h,
                                      const std::vector<std::vector<Rational>>& rows,
                                      const Token& at) const {
        const std::size_t n = var_index_.size();
        if (rows.size() != n)
            throw ParseError("eta must be " + std::to_string(n) + "x" + std::to_string(n),
                             at.line, at.column);
        for (const auto& r : rows)
            if (r.size() != n)
                throw ParseError("eta must be square", at.line, at.column);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (rows[i][j] != rows[j][i])
                    throw ParseError("eta must be symmetric", at.line, at.column);
        HamiltonianBlock block;
        block.h = h;
        block.eta_exact = rows;
        block.eta.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                block.eta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    rows[i][j].to_double();
        if (std::abs(block.eta.determinant()) <= 1e-12)
            throw ParseError("eta is singular", at.line, at.column);
        return block;
    }

    Token expect(Tok kind, const std::string& what) {
        Token t = lex_.next();
        if (t.kind != kind)
            throw ParseError("expected " + what + ", got `" + t.text + "`", t.line, t.column);
        return t;
    }
    void expect_keyword(const std::string& kw) {
        Token t = lex_.next();
        if (t.kind != Tok::Ident || t.text != kw)
            throw ParseError("expected keyword `" + kw + "`, got `" + t.text + "`", t.line,
                             t.column);
    }
    void expect_punct(const std::string& p) {
        Token t = lex_.next();
        if (t.kind != Tok::Punct || t.text != p)
            throw ParseError("expected `" + p + "`, got `" + t.text + "`", t.line, t.column);
    }

    Lexer lex_;
    std::unordered_map<std::string, int> var_index_;
};

} // namespace

SourceSpec parse_source(const std::string& text) { return Parser(text).parse(); }

SourceSpec parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_source(ss.str());
}

Expr parse_expression(const std::string& text, const std::vector<std::string>& variables) {
    return Parser(text).parse_standalone_expr(variables);
}

std::string format_source(const SourceSpec& spec) {
    std::ostringstream out;
    out << "system " << spec.name << "\n";
    out << "vars ";
    for (std::size_t i = 0; i < spec.variables.size(); ++i) {
        if (i) out << ", ";
        out << spec.variables[i];
    }
    out << ";\n";
    for (std::size_t i = 0; i < spec.densities.size(); ++i)
        out << "density " << spec.variables[i] << ": "
            << expr_str_named(spec.densities[i], spec.variables) << ";\n";
    for (std::size_t i = 0; i < spec.fluxes.size(); ++i)
        out << "flux " << spec.variables[i] << ": "
            << expr_str_named(spec.fluxes[i], spec.variables) << ";\n";
    for (const auto& law : spec.laws)
        out << "law " << law.name << ": " << expr_str_named(law.density, spec.variables)
            << " | " << expr_str_named(law.flux, spec.variables) << ";\n";
    if (spec.hamiltonian) {
        out << "hamiltonian: " << expr_str_named(spec.hamiltonian->h, spec.variables)
            << " eta [";
        const auto& rows = spec.hamiltonian->eta_exact;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i) out << "; ";
            for (std::size_t j = 0; j < rows[i].size(); ++j) {
                if (j) out << ", ";
                out << rows[i][j].str();
            }
        }
        out << "];\n";
    }
    if (spec.domain)
        out << "domain [" << spec.domain->first << ", " << spec.domain->second << "];\n";
    return out.str();
}

} // namespace claw
