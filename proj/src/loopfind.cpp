#include "loopvm/loopfind.hpp"

#include <algorithm>
#include <set>

#include "loopvm/errors.hpp"

namespace loopvm {

namespace {

// Mutable per-block traversal state for the depth-first loop reconstruction.
struct TraversalState {
    std::vector<char> visited;
    std::vector<char> active;
    std::vector<char> isHeader;
    std::vector<int> mainLoop;            // loop id whose header this block is, else -1
    std::vector<std::set<int>> loops;     // ids of loops known to contain the block
    std::vector<int> headerOf;            // per loop id: header block
    std::vector<std::set<int>> loopBlocks;
    std::vector<std::set<int>> backedgeSources;

    explicit TraversalState(int n)
        : visited(n, 0), active(n, 0), isHeader(n, 0), mainLoop(n, -1), loops(n) {}

    int makeLoop(int header) {
        if (mainLoop[header] >= 0) return mainLoop[header];
        int id = static_cast<int>(headerOf.size());
        headerOf.push_back(header);
        loopBlocks.emplace_back();
        backedgeSources.emplace_back();
        isHeader[header] = 1;
        mainLoop[header] = id;
        loops[header].insert(id);
        return id;
    }
};

// The loop set a finished block propagates to its predecessor in the
// traversal: everything it belongs to, minus its own loop when it is a header.
void propagateFrom(const TraversalState& st, int from, std::set<int>& into) {
    for (int l : st.loops[from]) {
        if (st.isHeader[from] && l == st.mainLoop[from]) continue;
        into.insert(l);
    }
}

struct Frame {
    int block;
    size_t nextSucc = 0;
};

} // namespace

FindLoopsResult findLoops(const Cfg& g) {
    FindLoopsOutput out;
    if (g.numBlocks == 0) return out;
    for (int s : g.successors[g.entry])
        if (s == g.entry) throw InternalError("entry block has a self-loop");

    TraversalState st(g.numBlocks);

    // Depth-first traversal with an explicit stack; successors are explored
    // in ascending block order. Reaching a block that is visited and still
    // active means a backedge, which creates (or reuses) the loop headed there.
    std::vector<Frame> stack;
    st.visited[g.entry] = st.active[g.entry] = 1;
    stack.push_back({g.entry});
    while (!stack.empty()) {
        Frame& fr = stack.back();
        int b = fr.block;
        if (fr.nextSucc < g.successors[b].size()) {
            int s = g.successors[b][fr.nextSucc++];
            if (!st.visited[s]) {
                st.visited[s] = st.active[s] = 1;
                stack.push_back({s});
            } else if (st.active[s]) {
                int id = st.makeLoop(s);
                st.backedgeSources[id].insert(b);
                // A backedge target hands back all loops containing it,
                // including its own.
                for (int l : st.loops[s]) st.loops[b].insert(l);
            } else {
                propagateFrom(st, s, st.loops[b]);
            }
        } else {
            for (int l : st.loops[b]) st.loopBlocks[l].insert(b);
            st.active[b] = 0;
            stack.pop_back();
            if (!stack.empty()) propagateFrom(st, b, st.loops[stack.back().block]);
        }
    }

    // The traversal alone misses memberships when a loop's header is
    // discovered after some member already closed, so run the loop sets to a
    // fixpoint: a block belongs to every loop a successor belongs to, except
    // the loop the successor itself heads (entering through a header does not
    // place the predecessor inside that loop).
    std::vector<int> reach = reachableBlocks(g);
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = reach.rbegin(); it != reach.rend(); ++it) {
            int b = *it;
            for (int s : g.successors[b]) {
                for (int l : st.loops[s]) {
                    if (st.isHeader[s] && l == st.mainLoop[s]) continue;
                    if (st.loops[b].insert(l).second) {
                        st.loopBlocks[l].insert(b);
                        changed = true;
                    }
                }
            }
        }
    }

    // A loop surviving to the entry block means some path enters a loop
    // without passing the header that was identified for it.
    if (!st.loops[g.entry].empty()) {
        IrreducibleInfo info;
        info.reason = "entry block acquired loop membership";
        info.entryLoopIds.assign(st.loops[g.entry].begin(), st.loops[g.entry].end());
        return info;
    }

    int numLoops = static_cast<int>(st.headerOf.size());
    for (int id = 0; id < numLoops; ++id) {
        Loop l;
        l.id = id;
        l.header = st.headerOf[id];
        l.blocks.assign(st.loopBlocks[id].begin(), st.loopBlocks[id].end());
        l.backedgeSources.assign(st.backedgeSources[id].begin(), st.backedgeSources[id].end());
        out.loops.push_back(std::move(l));
    }
    out.blockLoops.resize(g.numBlocks);
    for (int b = 0; b < g.numBlocks; ++b)
        out.blockLoops[b].assign(st.loops[b].begin(), st.loops[b].end());
    return out;
}

const Loop* LoopForest::byId(int id) const {
    for (const Loop& l : loops)
        if (l.id == id) return &l;
    return nullptr;
}

NestingResult computeNesting(std::vector<Loop> loops) {
    int n = static_cast<int>(loops.size());
    std::vector<const Loop*> byId(n, nullptr);
    for (const Loop& l : loops) {
        if (l.id < 0 || l.id >= n || byId[l.id] != nullptr)
            throw InternalError("loop ids must be dense creation-order indices");
        byId[l.id] = &l;
    }
    auto contains = [&](int a, int b) {
        return a != b && std::binary_search(byId[a]->blocks.begin(), byId[a]->blocks.end(),
                                            byId[b]->header);
    };

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (contains(i, j) && contains(j, i)) return MutualContainmentInfo{i, j};

    LoopForest forest;
    forest.parent.assign(n, -1);
    forest.children.resize(n);
    for (int b = 0; b < n; ++b) {
        std::vector<int> containers;
        for (int a = 0; a < n; ++a)
            if (contains(a, b)) containers.push_back(a);
        int direct = -1;
        for (int a : containers) {
            bool hasIntermediate = false;
            for (int c : containers)
                if (c != a && contains(a, c)) { hasIntermediate = true; break; }
            if (!hasIntermediate) {
                if (direct >= 0)
                    throw InternalError("ambiguous loop nesting: loops " + std::to_string(direct) +
                                        " and " + std::to_string(a) + " both directly contain loop " +
                                        std::to_string(b));
                direct = a;
            }
        }
        forest.parent[b] = direct;
    }
    for (int b = 0; b < n; ++b) {
        if (forest.parent[b] < 0)
            forest.roots.push_back(b);
        else
            forest.children[forest.parent[b]].push_back(b);
    }

    // Inside-out order: post-order over the containment forest, ids breaking
    // ties among siblings and roots.
    std::vector<int> order;
    std::vector<int> work;
    for (auto it = forest.roots.rbegin(); it != forest.roots.rend(); ++it) work.push_back(~*it);
    while (!work.empty()) {
        int v = work.back();
        work.pop_back();
        if (v < 0) {
            v = ~v;
            work.push_back(v);
            const std::vector<int>& kids = forest.children[v];
            for (auto it = kids.rbegin(); it != kids.rend(); ++it) work.push_back(~*it);
        } else {
            order.push_back(v);
        }
    }
    for (int id : order) forest.loops.push_back(*byId[id]);
    return forest;
}

AnalysisOutcome analyzeCfg(const Cfg& g) {
    FindLoopsResult found = findLoops(g);
    if (auto* irr = std::get_if<IrreducibleInfo>(&found)) return *irr;
    NestingResult nested = computeNesting(std::move(std::get<FindLoopsOutput>(found).loops));
    if (auto* mutual = std::get_if<MutualContainmentInfo>(&nested)) return *mutual;
    return std::move(std::get<LoopForest>(nested));
}

} // namespace loopvm
