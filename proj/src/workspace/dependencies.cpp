#include <algorithm>
#include <deque>

#include "tdsearch/core/canonical.hpp"
#include "tdsearch/extractor/extractor.hpp"
#include "tdsearch/extractor/lexer.hpp"
#include "tdsearch/extractor/scan.hpp"
#include "tdsearch/workspace/workspace.hpp"

namespace tds {

namespace {

bool punct_at(const std::vector<Token>& toks, std::size_t i, std::string_view s)
{
    return i < toks.size() && toks[i].kind == TokenKind::Punct && toks[i].text == s;
}

bool statement_start(const std::vector<Token>& toks, std::size_t i)
{
    if (i == 0) {
        return true;
    }
    const auto& p = toks[i - 1];
    return p.kind == TokenKind::Punct && (p.text == ";" || p.text == "{" || p.text == "}" || p.text == ":");
}

std::vector<Token> checked_tokens(std::string_view source)
{
    auto lexed = lex(source);
    if (lexed.issue) {
        throw *lexed.issue;
    }
    std::vector<Token> toks;
    for (auto& t : lexed.tokens) {
        if (t.kind != TokenKind::Preprocessor) {
            toks.push_back(std::move(t));
        }
    }
    if (auto bad = check_balance(toks)) {
        throw *bad;
    }
    return toks;
}

// Template parameters and alias names declared in the source.
std::set<std::string> local_type_names(const std::vector<Token>& toks)
{
    std::set<std::string> names;
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        if (toks[i].is("template") && punct_at(toks, i + 1, "<")) {
            int depth = 0;
            for (std::size_t j = i + 1; j < toks.size(); ++j) {
                if (punct_at(toks, j, "<")) {
                    ++depth;
                } else if (punct_at(toks, j, ">")) {
                    if (--depth == 0) {
                        break;
                    }
                } else if ((toks[j].is("class") || toks[j].is("typename")) && j + 1 < toks.size() &&
                           toks[j + 1].is_ident()) {
                    names.insert(toks[j + 1].text);
                }
            }
        }
        if (toks[i].is("using") && i + 2 < toks.size() && toks[i + 1].is_ident() && punct_at(toks, i + 2, "=")) {
            names.insert(toks[i + 1].text);
        }
    }
    return names;
}

bool in_workspace(const TypeName& t, const std::set<TypeName>& ws)
{
    return ws.count(t) != 0 ||
           std::any_of(ws.begin(), ws.end(), [&](const TypeName& w) { return w.simple == t.simple; });
}

}  // namespace

std::vector<TypeName> find_missing_types(std::string_view source, const std::set<TypeName>& workspace_types)
{
    const auto toks = checked_tokens(source);
    const auto scan = scan_code(toks);
    const auto tu = parse_translation_unit(source);

    std::vector<std::pair<std::size_t, TypeName>> refs;
    auto add = [&](std::size_t at, const ParsedType& pt) {
        if (pt.type.is_named()) {
            refs.emplace_back(at, pt.type.name);
        }
        for (const auto& a : pt.template_args) {
            refs.emplace_back(at, a);
        }
    };
    for (const auto& d : scan.declarations) {
        add(d.name_index, d.type);
    }
    for (const auto& c : scan.constructions) {
        refs.emplace_back(c.expr.begin, c.type);
    }
    // Return types: `T name(` at the start of a declaration.
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (!statement_start(toks, i)) {
            continue;
        }
        if (auto pt = parse_type(toks, i)) {
            if (pt->end + 1 < toks.size() && toks[pt->end].is_ident() && punct_at(toks, pt->end + 1, "(")) {
                add(i, *pt);
            }
        }
    }
    std::stable_sort(refs.begin(), refs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::set<std::string> local = local_type_names(toks);
    local.insert(scan.declared_types.begin(), scan.declared_types.end());
    for (const auto& decl : tu.types) {
        local.insert(decl.name.simple);
        local.insert(decl.nested_types.begin(), decl.nested_types.end());
    }

    std::vector<TypeName> out;
    for (const auto& [at, t] : refs) {
        if (t.simple.empty() || is_builtin_type(t) || local.count(t.simple) || in_workspace(t, workspace_types) ||
            std::find(out.begin(), out.end(), t) != out.end()) {
            continue;
        }
        out.push_back(t);
    }
    return out;
}

std::vector<std::pair<std::string, std::size_t>> members_used_on(std::string_view source, const TypeName& type)
{
    const auto toks = code_tokens(source);
    const auto scan = scan_code(toks);
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& call : scan.calls) {
        bool on_type = false;
        if (call.receiver_ctor) {
            on_type = call.receiver_ctor->simple == type.simple;
        } else if (const auto* d = scan.find_variable(call.receiver)) {
            on_type = d->type.type.is_named() && d->type.type.name.simple == type.simple;
        }
        std::pair<std::string, std::size_t> m{call.method, call.args.size()};
        if (on_type && std::find(out.begin(), out.end(), m) == out.end()) {
            out.push_back(std::move(m));
        }
    }
    return out;
}

std::string_view to_string(Heuristic h)
{
    switch (h) {
    case Heuristic::Workspace:
        return "WORKSPACE";
    case Heuristic::QualifiedName:
        return "QUALIFIED_NAME";
    case Heuristic::SimpleNameMembers:
        return "SIMPLE_NAME_MEMBERS";
    }
    return "WORKSPACE";
}

ResolutionPlan resolve_dependencies(const ComponentRecord& root, const CorpusIndex& ix,
                                    const std::set<TypeName>& workspace_types, int depth_cap)
{
    if (depth_cap < 1) {
        throw InvalidArgument("depthCap must be at least 1");
    }
    ResolutionPlan plan;
    plan.root = root.id;

    std::set<std::string> seen_types = {root.iface.class_name.qualified()};
    std::set<ComponentId> seen_components = {root.id};
    std::deque<std::pair<const ComponentRecord*, int>> queue = {{&root, 0}};

    while (!queue.empty()) {
        const auto [rec, depth] = queue.front();
        queue.pop_front();
        std::vector<TypeName> missing;
        try {
            missing = find_missing_types(rec->source, {});
        } catch (const UnparsableSource&) {
            continue;
        }
        for (const auto& t : missing) {
            if (!seen_types.insert(t.qualified()).second) {
                continue;
            }
            ResolutionStep step;
            step.missing_type = t;
            step.depth = depth + 1;
            const ComponentRecord* found = nullptr;

            if (in_workspace(t, workspace_types)) {
                step.heuristic = Heuristic::Workspace;
            } else {
                std::vector<const ComponentRecord*> exact;
                std::vector<const ComponentRecord*> by_simple;
                for (const auto& [id, c] : ix.components) {
                    if (c.iface.kind == ComponentKind::Test) {
                        continue;
                    }
                    if (c.iface.class_name == t) {
                        exact.push_back(&c);
                    }
                    if (c.iface.class_name.simple == t.simple) {
                        by_simple.push_back(&c);
                    }
                }
                if (exact.size() == 1) {
                    found = exact.front();
                    step.heuristic = Heuristic::QualifiedName;
                } else {
                    MqlQuery q;
                    q.class_name = t.simple;
                    for (const auto& [name, arity] : members_used_on(rec->source, t)) {
                        MethodPattern p;
                        p.name = name;
                        p.params.assign(arity, "*");
                        q.methods.push_back(std::move(p));
                    }
                    // ix.components is ordered by id, so the first full match is the least id.
                    for (const auto* c : by_simple) {
                        if (match_interface(q, c->iface).matched) {
                            found = c;
                            step.heuristic = Heuristic::SimpleNameMembers;
                            break;
                        }
                    }
                }
            }
            if (found) {
                if (!seen_components.insert(found->id).second) {
                    continue;
                }
                step.resolved_by = found->id;
                if (step.depth < depth_cap) {
                    queue.emplace_back(found, step.depth);
                }
            }
            plan.depth_reached = std::max(plan.depth_reached, step.depth);
            plan.steps.push_back(std::move(step));
        }
    }
    return plan;
}

}  // namespace tds
