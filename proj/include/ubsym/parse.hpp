#ifndef UBSYM_PARSE_HPP
#define UBSYM_PARSE_HPP

#include <cctype>
#include <cstdlib>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ubsym/ir.hpp"

namespace ubsym {

struct ParseResult
{
    std::optional<Program> program;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return program.has_value() && diagnostics.empty(); }
};

namespace detail {

struct Token
{
    enum class Kind { Name, Tmp, Int, Str, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    Word value = 0;
    int line = 1, col = 1;
};

class Lexer
{
public:
    explicit Lexer(const std::string& text) : src_(text) { advance(); }

    const Token& peek() const { return tok_; }
    Token take()
    {
        Token t = tok_;
        advance();
        return t;
    }
    bool error() const { return !errmsg_.empty(); }
    Diagnostic error_diag() const { return {errline_, errcol_, errmsg_}; }

private:
    void fail(int line, int col, const std::string& msg)
    {
        if (errmsg_.empty()) {
            errmsg_ = msg;
            errline_ = line;
            errcol_ = col;
        }
        tok_ = Token{Token::Kind::End, "", 0, line, col};
    }

    void advance()
    {
        // skip whitespace and comments
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (c == '\n') {
                ++pos_;
                ++line_;
                col_ = 1;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
                ++col_;
            } else {
                break;
            }
        }
        int line = line_, col = col_;
        if (pos_ >= src_.size()) {
            tok_ = Token{Token::Kind::End, "", 0, line, col};
            return;
        }
        char c = src_[pos_];
        if (c == '"') {
            std::string s;
            ++pos_;
            ++col_;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                char d = src_[pos_++];
                ++col_;
                if (d == '\\' && pos_ < src_.size()) {
                    char e = src_[pos_++];
                    ++col_;
                    switch (e) {
                    case 'n': s += '\n'; break;
                    case 't': s += '\t'; break;
                    case '"': s += '"'; break;
                    case '\\': s += '\\'; break;
                    default: s += e; break;
                    }
                } else if (d == '\n') {
                    fail(line, col, "unterminated string literal");
                    return;
                } else {
                    s += d;
                }
            }
            if (pos_ >= src_.size()) {
                fail(line, col, "unterminated string literal");
                return;
            }
            ++pos_;
            ++col_;
            tok_ = Token{Token::Kind::Str, s, 0, line, col};
            return;
        }
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            if (c == '-') {
                ++pos_;
                ++col_;
            }
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                fail(line, col, "malformed number");
                return;
            }
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++col_;
            }
            std::string text = src_.substr(start, pos_ - start);
            tok_ = Token{Token::Kind::Int, text, std::strtoll(text.c_str(), nullptr, 10), line, col};
            return;
        }
        if (c == '_' || std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (src_[pos_] == '_' || std::isalnum(static_cast<unsigned char>(src_[pos_])))) {
                ++pos_;
                ++col_;
            }
            std::string text = src_.substr(start, pos_ - start);
            if (text.size() >= 2 && text[0] == 't' &&
                std::isdigit(static_cast<unsigned char>(text[1]))) {
                bool allDigits = true;
                for (std::size_t i = 1; i < text.size(); ++i)
                    if (!std::isdigit(static_cast<unsigned char>(text[i]))) allDigits = false;
                if (allDigits) {
                    tok_ = Token{Token::Kind::Tmp, text, std::atoll(text.c_str() + 1), line, col};
                    return;
                }
            }
            tok_ = Token{Token::Kind::Name, text, 0, line, col};
            return;
        }
        static const std::string punct = "(){},:?=";
        if (punct.find(c) != std::string::npos) {
            ++pos_;
            ++col_;
            tok_ = Token{Token::Kind::Punct, std::string(1, c), 0, line, col};
            return;
        }
        fail(line, col, std::string("unexpected character '") + c + "'");
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
    std::string errmsg_;
    int errline_ = 1, errcol_ = 1;
};

class Parser
{
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    ParseResult parse()
    {
        Program p;
        while (lex_.peek().kind != Token::Kind::End && diags_.empty()) {
            if (at_name("global")) {
                lex_.take();
                std::string name = expect_name("global name");
                Word v = expect_int("initial value");
                p.globals.push_back({name, v});
            } else if (at_name("func")) {
                p.functions.push_back(parse_function());
            } else {
                error("expected 'func'");
            }
        }
        if (lex_.error()) diags_.push_back(lex_.error_diag());
        if (p.functions.empty() && diags_.empty()) error("expected 'func'");
        if (!diags_.empty()) return {std::nullopt, diags_};
        if (!p.function(p.entry) && !p.functions.empty())
            p.entry = p.functions.front().name;
        auto semantic = validate(p);
        for (auto& d : semantic) diags_.push_back(d);
        if (!diags_.empty()) return {std::nullopt, diags_};
        return {std::move(p), {}};
    }

private:
    Function parse_function()
    {
        Function f;
        lex_.take(); // func
        f.name = expect_name("function name");
        expect_punct("(");
        if (!at_punct(")")) {
            for (;;) {
                Param param;
                param.name = expect_name("parameter name");
                expect_punct(":");
                std::string kind = expect_name("parameter kind");
                if (kind == "int64")
                    param.kind = ParamKind::Int64;
                else if (kind == "string")
                    param.kind = ParamKind::Str;
                else
                    error("expected 'int64' or 'string'");
                f.params.push_back(param);
                if (at_punct(",")) {
                    lex_.take();
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
        expect_keyword("frame");
        f.frameSize = expect_int("frame size");
        expect_punct("{");
        while (!at_punct("}") && lex_.peek().kind != Token::Kind::End && diags_.empty()) {
            Block b;
            b.id = expect_name("block label");
            expect_punct(":");
            while (diags_.empty() && !at_punct("}") && !at_label()) {
                b.stmts.push_back(parse_stmt(f));
            }
            f.blocks.push_back(std::move(b));
        }
        expect_punct("}");
        if (!f.blocks.empty()) f.entryBlock = f.blocks.front().id;
        else if (diags_.empty()) error("function " + f.name + " has no blocks");
        return f;
    }

    // A label is a Name followed by ':' (one lookahead is enough because no
    // statement begins with Name ':' -- statement keywords are all uppercase
    // and call results start with a temporary).
    bool at_label()
    {
        const Token& t = lex_.peek();
        if (t.kind != Token::Kind::Name) return false;
        static const std::set<std::string> stmtKeywords = {
            "STORE", "PUT", "BR", "JMP", "RET", "CALL"};
        return !stmtKeywords.count(t.text);
    }

    Stmt parse_stmt(Function& f)
    {
        Stmt s;
        const Token& t = lex_.peek();
        s.line = t.line;
        if (t.kind == Token::Kind::Tmp) {
            int dst = static_cast<int>(lex_.take().value);
            expect_punct("=");
            if (at_name("CALL")) {
                parse_call(s);
                s.tmp = dst;
            } else {
                s.kind = Stmt::Kind::WrTmp;
                s.tmp = dst;
                s.e0 = parse_expr();
            }
            return s;
        }
        if (at_name("STORE")) {
            lex_.take();
            s.kind = Stmt::Kind::Store;
            expect_punct("(");
            s.e0 = parse_expr();
            expect_punct(",");
            s.e1 = parse_expr();
            expect_punct(",");
            if (at_name("len")) {
                lex_.take();
                s.storeSize = kDynamicSize;
            } else {
                s.storeSize = static_cast<int>(expect_int("store size"));
            }
            expect_punct(")");
            return s;
        }
        if (at_name("PUT")) {
            lex_.take();
            s.kind = Stmt::Kind::Put;
            expect_punct("(");
            s.reg = static_cast<int>(expect_int("register offset"));
            expect_punct(",");
            s.e0 = parse_expr();
            expect_punct(")");
            return s;
        }
        if (at_name("BR")) {
            int line = lex_.take().line;
            s.kind = Stmt::Kind::Branch;
            s.line = line;
            s.e0 = parse_expr();
            expect_punct("?");
            s.target0 = expect_name("then label");
            expect_punct(":");
            s.target1 = expect_name("else label");
            return s;
        }
        if (at_name("JMP")) {
            lex_.take();
            s.kind = Stmt::Kind::Jump;
            s.target0 = expect_name("jump label");
            return s;
        }
        if (at_name("RET")) {
            Token ret = lex_.take();
            s.kind = Stmt::Kind::Ret;
            // a value follows only on the same line
            const Token& next = lex_.peek();
            bool sameLine = next.line == ret.line;
            bool startsExpr = next.kind == Token::Kind::Tmp ||
                              next.kind == Token::Kind::Int ||
                              (next.kind == Token::Kind::Name && next.text != "RET" &&
                               !at_label_name(next.text));
            if (sameLine && startsExpr) {
                s.hasRetValue = true;
                s.e0 = parse_expr();
            }
            return s;
        }
        if (at_name("CALL")) {
            parse_call(s);
            return s;
        }
        error("expected statement");
        s.kind = Stmt::Kind::Ret;
        (void)f;
        return s;
    }

    bool at_label_name(const std::string&) const { return false; }

    void parse_call(Stmt& s)
    {
        lex_.take(); // CALL
        s.kind = Stmt::Kind::Call;
        s.callee = expect_name("callee name");
        expect_punct("(");
        if (!at_punct(")")) {
            for (;;) {
                s.args.push_back(parse_expr());
                if (at_punct(",")) {
                    lex_.take();
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
    }

    ExprPtr parse_expr()
    {
        const Token t = lex_.peek();
        if (t.kind == Token::Kind::Tmp) {
            lex_.take();
            return Expr::make_tmp(static_cast<int>(t.value));
        }
        if (t.kind == Token::Kind::Name) {
            if (t.text == "CONST") {
                lex_.take();
                return Expr::make_const(expect_int("constant"));
            }
            if (t.text == "STR") {
                lex_.take();
                if (lex_.peek().kind != Token::Kind::Str) {
                    error("expected string literal");
                    return Expr::make_const(0);
                }
                return Expr::make_str(lex_.take().text);
            }
            if (t.text == "GET") {
                lex_.take();
                expect_punct("(");
                Word reg = expect_int("register offset");
                expect_punct(")");
                return Expr::make_get(static_cast<int>(reg));
            }
            if (t.text == "LOAD") {
                lex_.take();
                expect_punct("(");
                ExprPtr addr = parse_expr();
                expect_punct(",");
                Word size = expect_int("load size");
                expect_punct(")");
                return Expr::make_load(addr, static_cast<int>(size));
            }
            if (t.text == "STRLEN") {
                lex_.take();
                expect_punct("(");
                ExprPtr a = parse_expr();
                expect_punct(")");
                return Expr::make_strlen(a);
            }
            static const std::map<std::string, BinOp> binops = {
                {"Add64", BinOp::Add64},     {"Sub64", BinOp::Sub64},
                {"Mul64", BinOp::Mul64},     {"CmpEQ64", BinOp::CmpEQ64},
                {"CmpNE64", BinOp::CmpNE64}, {"CmpLT64s", BinOp::CmpLT64s},
                {"CmpLE64s", BinOp::CmpLE64s},
            };
            static const std::map<std::string, UnOp> unops = {
                {"Not1", UnOp::Not1}, {"Neg64", UnOp::Neg64}};
            if (auto it = binops.find(t.text); it != binops.end()) {
                lex_.take();
                expect_punct("(");
                ExprPtr a = parse_expr();
                expect_punct(",");
                ExprPtr b = parse_expr();
                expect_punct(")");
                return Expr::make_binop(it->second, a, b);
            }
            if (auto it = unops.find(t.text); it != unops.end()) {
                lex_.take();
                expect_punct("(");
                ExprPtr a = parse_expr();
                expect_punct(")");
                return Expr::make_unop(it->second, a);
            }
        }
        error("expected expression");
        lex_.take();
        return Expr::make_const(0);
    }

    bool at_name(const std::string& n) const
    {
        return lex_.peek().kind == Token::Kind::Name && lex_.peek().text == n;
    }
    bool at_punct(const std::string& p) const
    {
        return lex_.peek().kind == Token::Kind::Punct && lex_.peek().text == p;
    }
    std::string expect_name(const std::string& what)
    {
        if (lex_.peek().kind != Token::Kind::Name) {
            error("expected " + what);
            return "";
        }
        return lex_.take().text;
    }
    void expect_keyword(const std::string& kw)
    {
        if (!at_name(kw)) {
            error("expected '" + kw + "'");
            return;
        }
        lex_.take();
    }
    Word expect_int(const std::string& what)
    {
        if (lex_.peek().kind != Token::Kind::Int) {
            error("expected " + what);
            return 0;
        }
        return lex_.take().value;
    }
    void expect_punct(const std::string& p)
    {
        if (!at_punct(p)) {
            error("expected '" + p + "'");
            return;
        }
        lex_.take();
    }
    void error(const std::string& msg)
    {
        if (diags_.empty()) {
            const Token& t = lex_.peek();
            diags_.push_back({t.line, t.col, msg});
        }
    }

    Lexer lex_;
    std::vector<Diagnostic> diags_;
};

} // namespace detail

inline ParseResult parse_program(const std::string& text)
{
    return detail::Parser(text).parse();
}

} // namespace ubsym

#endif
