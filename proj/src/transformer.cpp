#include "moca/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moca/error.hpp"
#include "moca/rng.hpp"

namespace moca {

namespace {

constexpr double kMaskValue = -1e9;
constexpr double kLnEps = 1e-5;

void add_xavier(ParamSet& set, const std::string& name, size_t rows, size_t cols, Rng& rng, DType dtype) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t({rows, cols}, dtype);
    for (size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
    t.quantize();
    set.add(name, std::move(t));
}

void add_ln(ParamSet& set, const std::string& prefix, size_t d, DType dtype) {
    set.add(prefix + ".gain", Tensor::full({d}, 1.0, dtype));
    set.add(prefix + ".bias", Tensor::zeros({d}, dtype));
}

void add_attention(ParamSet& set, const std::string& prefix, size_t d, Rng& rng, DType dtype) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) add_xavier(set, prefix + "." + w, d, d, rng, dtype);
    for (const char* b : {"bq", "bk", "bv", "bo"}) set.add(prefix + "." + b, Tensor::zeros({d}, dtype));
}

void add_ff(ParamSet& set, const std::string& prefix, size_t d, size_t ff, Rng& rng, DType dtype) {
    add_xavier(set, prefix + ".w1", d, ff, rng, dtype);
    set.add(prefix + ".b1", Tensor::zeros({ff}, dtype));
    add_xavier(set, prefix + ".w2", ff, d, rng, dtype);
    set.add(prefix + ".b2", Tensor::zeros({d}, dtype));
}

}  // namespace

TransformerParams init_params(const TransformerHyper& hyper, uint64_t seed) {
    if (hyper.layers < 1 || hyper.d_model < 1 || hyper.heads < 1 || hyper.d_ff < 1 ||
        hyper.vocab_size <= kNumReserved || hyper.max_positions < 2) {
        throw ConfigError("transformer: dimensions must be positive (vocab > 4, positions >= 2)");
    }
    if (hyper.d_model % hyper.heads != 0) {
        throw ConfigError("transformer: d_model " + std::to_string(hyper.d_model) + " not divisible by heads " +
                          std::to_string(hyper.heads));
    }
    TransformerParams p;
    p.hyper = hyper;
    Rng rng(seed ^ 0x7e11a9d1c0ffeeULL);
    const size_t d = static_cast<size_t>(hyper.d_model);
    const size_t ff = static_cast<size_t>(hyper.d_ff);
    const size_t v = static_cast<size_t>(hyper.vocab_size);
    const DType dt = hyper.dtype;

    add_xavier(p.tensors, "tok_emb", v, d, rng, dt);
    add_xavier(p.tensors, "pos_emb", static_cast<size_t>(hyper.max_positions), d, rng, dt);
    for (int l = 0; l < hyper.layers; ++l) {
        const std::string pre = "enc" + std::to_string(l);
        add_ln(p.tensors, pre + ".ln1", d, dt);
        add_attention(p.tensors, pre + ".attn", d, rng, dt);
        add_ln(p.tensors, pre + ".ln2", d, dt);
        add_ff(p.tensors, pre + ".ff", d, ff, rng, dt);
    }
    add_ln(p.tensors, "enc.ln_final", d, dt);
    for (int l = 0; l < hyper.layers; ++l) {
        const std::string pre = "dec" + std::to_string(l);
        add_ln(p.tensors, pre + ".ln1", d, dt);
        add_attention(p.tensors, pre + ".self", d, rng, dt);
        add_ln(p.tensors, pre + ".ln2", d, dt);
        add_attention(p.tensors, pre + ".cross", d, rng, dt);
        add_ln(p.tensors, pre + ".ln3", d, dt);
        add_ff(p.tensors, pre + ".ff", d, ff, rng, dt);
    }
    add_ln(p.tensors, "dec.ln_final", d, dt);
    add_xavier(p.tensors, "out.w", d, v, rng, dt);
    p.tensors.add("out.b", Tensor::zeros({v}, dt));
    return p;
}

NodeId BoundParams::id(const std::string& name) const {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ContractError("bound params: unknown name " + name);
    return it->second;
}

BoundParams bind_params(Tape& tape, const TransformerParams& params) {
    BoundParams bound;
    bound.params = &params;
    for (const auto& item : params.tensors.items()) {
        bound.by_name.emplace(item.name, tape.leaf(item.value, /*is_param=*/true));
    }
    return bound;
}

GradMap grads_by_name(const Tape& tape, const BoundParams& bound, NodeId loss) {
    auto by_node = tape.backward(loss);
    GradMap out;
    for (const auto& [name, id] : bound.by_name) {
        auto it = by_node.find(id);
        if (it == by_node.end()) throw ContractError("grads_by_name: missing gradient for " + name);
        out.emplace(name, std::move(it->second));
    }
    return out;
}

namespace {

// Graph-building helpers shared by encoder, decoder and the incremental
// scorer; keeping one primitive sequence is what makes the cached decode
// path reproduce the tape forward bit for bit.
struct Builder {
    Tape& tape;
    const BoundParams& bound;
    const TransformerHyper& hy;

    NodeId p(const std::string& name) const { return bound.id(name); }

    NodeId linear(NodeId x, const std::string& prefix, const char* w, const char* b) const {
        NodeId mm = tape.apply(OpKind::matmul, {x, p(prefix + "." + w)});
        return tape.apply(OpKind::add, {mm, p(prefix + "." + b)});
    }

    NodeId layer_norm(NodeId x, const std::string& prefix) const {
        OpAttrs a;
        a.eps = kLnEps;
        return tape.apply(OpKind::layer_norm, {x, p(prefix + ".gain"), p(prefix + ".bias")}, a);
    }

    // Token embedding (scaled by sqrt(d)) plus positional rows [start, start+n).
    NodeId embed(const std::vector<int>& ids, size_t pos_start) const {
        OpAttrs look;
        look.ids = ids;
        NodeId e = tape.apply(OpKind::embedding_lookup, {p("tok_emb")}, look);
        OpAttrs sc;
        sc.factor = std::sqrt(static_cast<double>(hy.d_model));
        e = tape.apply(OpKind::scale, {e}, sc);
        OpAttrs sl;
        sl.dim = 0;
        sl.start = pos_start;
        sl.len = ids.size();
        NodeId pos = tape.apply(OpKind::slice, {p("pos_emb")}, sl);
        return tape.apply(OpKind::add, {e, pos});
    }

    // Multi-head attention given projected q/k/v. q covers input positions
    // [kv_rows - q_rows, kv_rows); with `causal`, query row i may attend to
    // key rows <= i + (kv_rows - q_rows).
    NodeId attention_from_qkv(NodeId q, NodeId k, NodeId v, const std::string& prefix, bool causal,
                              size_t q_rows, size_t kv_rows) const {
        const size_t dh = static_cast<size_t>(hy.d_model / hy.heads);
        NodeId mask = -1;
        if (causal) {
            Tensor m({q_rows, kv_rows}, bound.params->hyper.dtype);
            const size_t shift = kv_rows - q_rows;
            bool any = false;
            for (size_t i = 0; i < q_rows; ++i)
                for (size_t j = 0; j < kv_rows; ++j)
                    if (j > i + shift) {
                        m.at(i, j) = kMaskValue;
                        any = true;
                    }
            if (any) mask = tape.leaf(std::move(m));
        }
        std::vector<NodeId> head_outs;
        OpAttrs sc;
        sc.factor = 1.0 / std::sqrt(static_cast<double>(dh));
        for (int h = 0; h < hy.heads; ++h) {
            OpAttrs cut;
            cut.dim = 1;
            cut.start = static_cast<size_t>(h) * dh;
            cut.len = dh;
            NodeId qh = tape.apply(OpKind::slice, {q}, cut);
            NodeId kh = tape.apply(OpKind::slice, {k}, cut);
            NodeId vh = tape.apply(OpKind::slice, {v}, cut);
            NodeId scores = tape.apply(OpKind::matmul, {qh, tape.apply(OpKind::transpose, {kh})});
            scores = tape.apply(OpKind::scale, {scores}, sc);
            if (mask >= 0) scores = tape.apply(OpKind::add, {scores, mask});
            NodeId w = tape.apply(OpKind::softmax_rows, {scores});
            head_outs.push_back(tape.apply(OpKind::matmul, {w, vh}));
        }
        OpAttrs cat;
        cat.dim = 1;
        NodeId merged = tape.apply(OpKind::concat, std::move(head_outs), cat);
        return linear(merged, prefix, "wo", "bo");
    }

    NodeId self_attention(NodeId x, const std::string& prefix, bool causal, size_t rows) const {
        NodeId q = linear(x, prefix, "wq", "bq");
        NodeId k = linear(x, prefix, "wk", "bk");
        NodeId v = linear(x, prefix, "wv", "bv");
        return attention_from_qkv(q, k, v, prefix, causal, rows, rows);
    }

    NodeId cross_attention(NodeId x, NodeId memory, const std::string& prefix, size_t q_rows,
                           size_t kv_rows) const {
        NodeId q = linear(x, prefix, "wq", "bq");
        NodeId k = linear(memory, prefix, "wk", "bk");
        NodeId v = linear(memory, prefix, "wv", "bv");
        return attention_from_qkv(q, k, v, prefix, false, q_rows, kv_rows);
    }

    NodeId feed_forward(NodeId x, const std::string& prefix) const {
        NodeId h = linear(x, prefix, "w1", "b1");
        h = tape.apply(OpKind::gelu, {h});
        return linear(h, prefix, "w2", "b2");
    }
};

std::vector<int> decoder_input_ids(const TokenSeq& target) {
    const size_t scored = target.scored_positions();
    if (scored == 0) throw ContractError("decoder: empty target");
    std::vector<int> ids;
    ids.reserve(scored);
    ids.push_back(kBosId);
    for (size_t i = 0; i + 1 < scored; ++i) ids.push_back(target.ids[i]);
    return ids;
}

std::vector<int> gold_ids(const TokenSeq& target) {
    std::vector<int> ids = target.ids;
    if (target.terminated) ids.push_back(kEosId);
    return ids;
}

}  // namespace

NodeId encoder_forward(Tape& tape, const BoundParams& bound, const std::vector<int>& src_ids) {
    const TransformerHyper& hy = bound.params->hyper;
    if (src_ids.empty()) throw ContractError("encoder: empty source");
    if (src_ids.size() > static_cast<size_t>(hy.max_positions)) {
        throw ContractError("encoder: source length " + std::to_string(src_ids.size()) +
                            " exceeds position capacity " + std::to_string(hy.max_positions));
    }
    Builder b{tape, bound, hy};
    const size_t s = src_ids.size();
    NodeId x = b.embed(src_ids, 0);
    for (int l = 0; l < hy.layers; ++l) {
        const std::string pre = "enc" + std::to_string(l);
        NodeId attn = b.self_attention(b.layer_norm(x, pre + ".ln1"), pre + ".attn", false, s);
        x = tape.apply(OpKind::add, {x, attn});
        NodeId ff = b.feed_forward(b.layer_norm(x, pre + ".ln2"), pre + ".ff");
        x = tape.apply(OpKind::add, {x, ff});
    }
    return b.layer_norm(x, "enc.ln_final");
}

NodeId decoder_logprob_rows(Tape& tape, const BoundParams& bound, NodeId enc_out, const TokenSeq& target) {
    const TransformerHyper& hy = bound.params->hyper;
    const std::vector<int> input = decoder_input_ids(target);
    if (input.size() > static_cast<size_t>(hy.max_positions)) {
        throw ContractError("decoder: target length " + std::to_string(input.size()) +
                            " exceeds position capacity " + std::to_string(hy.max_positions));
    }
    Builder b{tape, bound, hy};
    const size_t t = input.size();
    const size_t s = tape.value(enc_out).dim(0);
    NodeId x = b.embed(input, 0);
    for (int l = 0; l < hy.layers; ++l) {
        const std::string pre = "dec" + std::to_string(l);
        NodeId attn = b.self_attention(b.layer_norm(x, pre + ".ln1"), pre + ".self", true, t);
        x = tape.apply(OpKind::add, {x, attn});
        NodeId cross = b.cross_attention(b.layer_norm(x, pre + ".ln2"), enc_out, pre + ".cross", t, s);
        x = tape.apply(OpKind::add, {x, cross});
        NodeId ff = b.feed_forward(b.layer_norm(x, pre + ".ln3"), pre + ".ff");
        x = tape.apply(OpKind::add, {x, ff});
    }
    x = b.layer_norm(x, "dec.ln_final");
    NodeId logits = b.linear(x, "out", "w", "b");
    return tape.apply(OpKind::log_softmax_rows, {logits});
}

NodeId decoder_nll_column(Tape& tape, const BoundParams& bound, NodeId enc_out, const TokenSeq& target) {
    NodeId rows = decoder_logprob_rows(tape, bound, enc_out, target);
    OpAttrs a;
    a.ids = gold_ids(target);
    return tape.apply(OpKind::cross_entropy_from_logprobs, {rows}, a);
}

NodeId mle_loss_node(Tape& tape, const BoundParams& bound, NodeId enc_out, const TokenSeq& target) {
    if (target.ids.empty()) throw ContractError("mle_loss: empty target");
    return tape.apply(OpKind::mean, {decoder_nll_column(tape, bound, enc_out, target)});
}

Tensor forward_logprobs(const TransformerParams& params, const TokenSeq& source, const TokenSeq& target) {
    Tape tape;
    BoundParams bound = bind_params(tape, params);
    NodeId enc = encoder_forward(tape, bound, source.ids);
    NodeId rows = decoder_logprob_rows(tape, bound, enc, target);
    return tape.value(rows);
}

double mle_loss(const TransformerParams& params, const Example& example) {
    Tape tape;
    BoundParams bound = bind_params(tape, params);
    NodeId enc = encoder_forward(tape, bound, example.source.ids);
    return tape.value(mle_loss_node(tape, bound, enc, example.target)).scalar_value();
}

ExampleGrad mle_loss_grad(const TransformerParams& params, const Example& example) {
    Tape tape;
    BoundParams bound = bind_params(tape, params);
    NodeId enc = encoder_forward(tape, bound, example.source.ids);
    NodeId loss = mle_loss_node(tape, bound, enc, example.target);
    ExampleGrad out;
    out.loss = tape.value(loss).scalar_value();
    out.grads = grads_by_name(tape, bound, loss);
    return out;
}

std::vector<PositionalBucket> positional_accuracy(const TransformerParams& params,
                                                  const std::vector<Example>& dataset, int bucket_width) {
    if (dataset.empty()) throw ContractError("positional_accuracy: empty dataset");
    if (bucket_width < 1) throw ContractError("positional_accuracy: bucket width must be >= 1");
    std::map<int, std::pair<size_t, size_t>> buckets;  // bucket -> (correct, total)
    for (const Example& ex : dataset) {
        const Tensor rows = forward_logprobs(params, ex.source, ex.target);
        const std::vector<int> gold = gold_ids(ex.target);
        for (size_t t = 0; t < gold.size(); ++t) {
            size_t best = 0;
            for (size_t j = 1; j < rows.cols(); ++j) {
                if (rows.at(t, j) > rows.at(t, best)) best = j;
            }
            auto& slot = buckets[static_cast<int>(t) / bucket_width];
            slot.second += 1;
            if (static_cast<int>(best) == gold[t]) slot.first += 1;
        }
    }
    std::vector<PositionalBucket> out;
    for (const auto& [bucket, counts] : buckets) {
        if (counts.second == 0) continue;
        PositionalBucket pb;
        pb.start = bucket * bucket_width;
        pb.end = pb.start + bucket_width;
        pb.count = counts.second;
        pb.accuracy = static_cast<double>(counts.first) / static_cast<double>(counts.second);
        out.push_back(pb);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Incremental scorer

namespace {

struct VecHash {
    size_t operator()(const std::vector<int>& v) const {
        size_t h = 1469598103934665603ULL;
        for (int x : v) {
            h ^= static_cast<size_t>(static_cast<uint32_t>(x));
            h *= 1099511628211ULL;
        }
        return h;
    }
};

Tensor op(OpKind kind, const std::vector<const Tensor*>& in, const OpAttrs& attrs = {}) {
    return apply_primitive(kind, in, attrs);
}

}  // namespace

struct TransformerScorer::Impl {
    const TransformerParams& params;
    std::vector<int> src;
    Tensor memory;                       // encoder output [S x d]
    std::vector<Tensor> cross_k;         // per decoder layer [S x d]
    std::vector<Tensor> cross_v;

    struct Entry {
        std::vector<Tensor> self_k;  // per decoder layer [t x d]
        std::vector<Tensor> self_v;
        std::vector<double> logprobs;
    };
    std::unordered_map<std::vector<int>, Entry, VecHash> cache;

    Impl(const TransformerParams& p, std::vector<int> src_ids) : params(p), src(std::move(src_ids)) {
        Tape tape;
        BoundParams bound = bind_params(tape, params);
        memory = tape.value(encoder_forward(tape, bound, src));
        for (int l = 0; l < params.hyper.layers; ++l) {
            const std::string pre = "dec" + std::to_string(l) + ".cross";
            cross_k.push_back(projected(memory, pre + ".wk", pre + ".bk"));
            cross_v.push_back(projected(memory, pre + ".wv", pre + ".bv"));
        }
    }

    Tensor projected(const Tensor& x, const std::string& w, const std::string& b) const {
        Tensor mm = op(OpKind::matmul, {&x, &params.tensors.get(w)});
        return op(OpKind::add, {&mm, &params.tensors.get(b)});
    }

    Tensor ln_row(const Tensor& x, const std::string& prefix) const {
        OpAttrs a;
        a.eps = kLnEps;
        return op(OpKind::layer_norm, {&x, &params.tensors.get(prefix + ".gain"), &params.tensors.get(prefix + ".bias")},
                  a);
    }

    // Attention of a single query row against given K/V using the shared
    // primitive granularity (per-head slice, scale after scores, softmax).
    Tensor row_attention(const Tensor& q, const Tensor& k, const Tensor& v, const std::string& prefix) const {
        const int heads = params.hyper.heads;
        const size_t dh = static_cast<size_t>(params.hyper.d_model / heads);
        OpAttrs sc;
        sc.factor = 1.0 / std::sqrt(static_cast<double>(dh));
        std::vector<Tensor> pieces;
        pieces.reserve(static_cast<size_t>(heads));
        for (int h = 0; h < heads; ++h) {
            OpAttrs cut;
            cut.dim = 1;
            cut.start = static_cast<size_t>(h) * dh;
            cut.len = dh;
            Tensor qh = op(OpKind::slice, {&q}, cut);
            Tensor kh = op(OpKind::slice, {&k}, cut);
            Tensor vh = op(OpKind::slice, {&v}, cut);
            Tensor kt = op(OpKind::transpose, {&kh});
            Tensor scores = op(OpKind::matmul, {&qh, &kt});
            scores = op(OpKind::scale, {&scores}, sc);
            Tensor w = op(OpKind::softmax_rows, {&scores});
            pieces.push_back(op(OpKind::matmul, {&w, &vh}));
        }
        std::vector<const Tensor*> refs;
        for (const Tensor& t : pieces) refs.push_back(&t);
        OpAttrs cat;
        cat.dim = 1;
        Tensor merged = op(OpKind::concat, refs, cat);
        Tensor out = op(OpKind::matmul, {&merged, &params.tensors.get(prefix + ".wo")});
        return op(OpKind::add, {&out, &params.tensors.get(prefix + ".bo")});
    }

    // Extends `parent` (state after `pos` input positions) by the input token
    // at position `pos`.
    Entry extend(const Entry* parent, int token, size_t pos) {
        const TransformerHyper& hy = params.hyper;
        if (pos + 1 > static_cast<size_t>(hy.max_positions)) {
            throw ContractError("scorer: prefix exceeds position capacity");
        }
        OpAttrs look;
        look.ids = {token};
        Tensor x = op(OpKind::embedding_lookup, {&params.tensors.get("tok_emb")}, look);
        OpAttrs scale_attr;
        scale_attr.factor = std::sqrt(static_cast<double>(hy.d_model));
        x = op(OpKind::scale, {&x}, scale_attr);
        OpAttrs sl;
        sl.dim = 0;
        sl.start = pos;
        sl.len = 1;
        Tensor pos_row = op(OpKind::slice, {&params.tensors.get("pos_emb")}, sl);
        x = op(OpKind::add, {&x, &pos_row});

        Entry e;
        e.self_k.reserve(static_cast<size_t>(hy.layers));
        e.self_v.reserve(static_cast<size_t>(hy.layers));
        OpAttrs cat0;
        cat0.dim = 0;
        for (int l = 0; l < hy.layers; ++l) {
            const std::string pre = "dec" + std::to_string(l);
            Tensor h = ln_row(x, pre + ".ln1");
            Tensor q = projected(h, pre + ".self.wq", pre + ".self.bq");
            Tensor k_new = projected(h, pre + ".self.wk", pre + ".self.bk");
            Tensor v_new = projected(h, pre + ".self.wv", pre + ".self.bv");
            Tensor k_all = parent == nullptr
                               ? k_new
                               : op(OpKind::concat, {&parent->self_k[static_cast<size_t>(l)], &k_new}, cat0);
            Tensor v_all = parent == nullptr
                               ? v_new
                               : op(OpKind::concat, {&parent->self_v[static_cast<size_t>(l)], &v_new}, cat0);
            Tensor attn = row_attention(q, k_all, v_all, pre + ".self");
            x = op(OpKind::add, {&x, &attn});
            e.self_k.push_back(std::move(k_all));
            e.self_v.push_back(std::move(v_all));

            Tensor h2 = ln_row(x, pre + ".ln2");
            Tensor q2 = projected(h2, pre + ".cross.wq", pre + ".cross.bq");
            Tensor cross = row_attention(q2, cross_k[static_cast<size_t>(l)], cross_v[static_cast<size_t>(l)],
                                         pre + ".cross");
            x = op(OpKind::add, {&x, &cross});

            Tensor h3 = ln_row(x, pre + ".ln3");
            Tensor f1 = projected(h3, pre + ".ff.w1", pre + ".ff.b1");
            Tensor g = op(OpKind::gelu, {&f1});
            Tensor f2 = projected(g, pre + ".ff.w2", pre + ".ff.b2");
            x = op(OpKind::add, {&x, &f2});
        }
        x = ln_row(x, "dec.ln_final");
        Tensor logits = projected(x, "out.w", "out.b");
        Tensor lp = op(OpKind::log_softmax_rows, {&logits});
        e.logprobs.assign(lp.values().begin(), lp.values().end());
        return e;
    }

    std::vector<int> sub_prefix(const std::vector<int>& prefix, size_t n) const {
        return std::vector<int>(prefix.begin(), prefix.begin() + static_cast<long>(n));
    }

    const Entry& ensure(const std::vector<int>& prefix) {
        auto hit = cache.find(prefix);
        if (hit != cache.end()) return hit->second;
        if (!cache.count(std::vector<int>{})) {
            cache.emplace(std::vector<int>{}, extend(nullptr, kBosId, 0));
        }
        if (prefix.empty()) return cache.at(prefix);
        // Deepest cached ancestor, then one extension per missing position.
        size_t m = prefix.size() - 1;
        while (m > 0 && !cache.count(sub_prefix(prefix, m))) --m;
        for (size_t n = m + 1; n <= prefix.size(); ++n) {
            const Entry& parent = cache.at(sub_prefix(prefix, n - 1));
            Entry e = extend(&parent, prefix[n - 1], n);
            cache.emplace(sub_prefix(prefix, n), std::move(e));
        }
        return cache.at(prefix);
    }
};

TransformerScorer::TransformerScorer(const TransformerParams& params, std::vector<int> src_ids)
    : impl_(std::make_unique<Impl>(params, std::move(src_ids))) {}

TransformerScorer::~TransformerScorer() = default;

int TransformerScorer::vocab_size() const { return impl_->params.hyper.vocab_size; }

std::vector<double> TransformerScorer::next_logprobs(const std::vector<int>& prefix) {
    return impl_->ensure(prefix).logprobs;
}

size_t TransformerScorer::cached_prefixes() const { return impl_->cache.size(); }

Hypothesis greedy_decode(const TransformerParams& params, const TokenSeq& source, const DecodeConfig& cfg) {
    TransformerScorer scorer(params, source.ids);
    return greedy_decode(scorer, cfg);
}

std::vector<Hypothesis> beam_search(const TransformerParams& params, const TokenSeq& source,
                                    const DecodeConfig& cfg) {
    TransformerScorer scorer(params, source.ids);
    return beam_search(scorer, cfg);
}

std::vector<Hypothesis> diverse_beam_search(const TransformerParams& params, const TokenSeq& source,
                                            const DecodeConfig& cfg) {
    TransformerScorer scorer(params, source.ids);
    return diverse_beam_search(scorer, cfg);
}

}  // namespace moca
