#include "loopvm/cfg.hpp"

#include <algorithm>
#include <sstream>

#include "loopvm/loopfind.hpp"

namespace loopvm {

Cfg buildCfg(const Function& f) {
    Cfg g;
    g.numBlocks = static_cast<int>(f.blocks.size());
    g.entry = 0;
    g.successors.resize(g.numBlocks);
    g.predecessors.resize(g.numBlocks);
    for (const BasicBlock& b : f.blocks) {
        std::vector<int>& succ = g.successors[b.index];
        switch (b.terminator.kind) {
            case Terminator::Kind::Jump:
                succ.push_back(b.terminator.target);
                break;
            case Terminator::Kind::Branch:
                succ.push_back(b.terminator.target);
                succ.push_back(b.terminator.altTarget);
                break;
            case Terminator::Kind::Ret:
                break;
        }
        std::sort(succ.begin(), succ.end());
        succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    }
    for (int b = 0; b < g.numBlocks; ++b)
        for (int s : g.successors[b]) g.predecessors[s].push_back(b);
    for (std::vector<int>& preds : g.predecessors) {
        std::sort(preds.begin(), preds.end());
        preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    }
    return g;
}

std::vector<int> reachableBlocks(const Cfg& g) {
    std::vector<char> seen(g.numBlocks, 0);
    std::vector<int> stack{g.entry};
    seen[g.entry] = 1;
    while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        for (int s : g.successors[b]) {
            if (!seen[s]) {
                seen[s] = 1;
                stack.push_back(s);
            }
        }
    }
    std::vector<int> out;
    for (int b = 0; b < g.numBlocks; ++b)
        if (seen[b]) out.push_back(b);
    return out;
}

namespace {

void emitLoopCluster(std::ostringstream& os, const LoopForest& forest, int loopId,
                     std::vector<char>& inLoop, const std::string& indent) {
    const Loop* loop = forest.byId(loopId);
    os << indent << "subgraph cluster_loop" << loopId << " {\n";
    os << indent << "  label=\"loop " << loopId << "\";\n";
    for (int child : forest.children[loopId])
        emitLoopCluster(os, forest, child, inLoop, indent + "  ");
    for (int b : loop->blocks) {
        if (!inLoop[b]) {
            os << indent << "  n" << b << ";\n";
            inLoop[b] = 1;
        }
    }
    os << indent << "}\n";
}

} // namespace

std::string exportDot(const Cfg& g, const LoopForest* loops, const std::string& name) {
    std::ostringstream os;
    os << "digraph \"" << name << "\" {\n";
    os << "  rankdir=TB;\n";
    std::vector<char> isHeader(g.numBlocks, 0);
    if (loops != nullptr)
        for (const Loop& l : loops->loops) isHeader[l.header] = 1;
    for (int b = 0; b < g.numBlocks; ++b) {
        os << "  n" << b << " [label=\"" << b << "\""
           << (isHeader[b] ? ", shape=doublecircle" : "") << "];\n";
    }
    if (loops != nullptr) {
        // Emit clusters from the roots so inner loops nest textually inside
        // their parents; each block is listed in its innermost loop only.
        std::vector<char> claimed(g.numBlocks, 0);
        for (int root : loops->roots) emitLoopCluster(os, *loops, root, claimed, "  ");
    }
    for (int b = 0; b < g.numBlocks; ++b)
        for (int s : g.successors[b]) os << "  n" << b << " -> n" << s << ";\n";
    os << "}\n";
    return os.str();
}

} // namespace loopvm
