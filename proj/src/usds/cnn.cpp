#include "flowdd/usds/cnn.hpp"

#include "flowdd/error.hpp"
#include "flowdd/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace flowdd::usds {

std::size_t LayerSpec::weight_count() const noexcept {
    if (kind == LayerKind::FullyConnected) {
        return static_cast<std::size_t>(in_dim) * out_shape.size();
    }
    return static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w;
}

std::size_t LayerSpec::bias_count() const noexcept {
    return kind == LayerKind::FullyConnected ? out_shape.size() : out_channels;
}

LayerSpec LayerSpec::conv(Branch b, std::uint32_t in, std::uint32_t out, std::uint32_t k, std::uint32_t stride,
                          std::uint32_t pad, bool relu) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.branch = b;
    s.relu = relu;
    s.in_channels = in;
    s.out_channels = out;
    s.kernel_h = s.kernel_w = k;
    s.stride_h = s.stride_w = stride;
    s.pad_h = s.pad_w = pad;
    return s;
}

LayerSpec LayerSpec::tconv(Branch b, std::uint32_t in, std::uint32_t out, std::uint32_t k, std::uint32_t stride,
                           std::uint32_t pad, bool relu) {
    LayerSpec s = conv(b, in, out, k, stride, pad, relu);
    s.kind = LayerKind::TransposedConv;
    return s;
}

LayerSpec LayerSpec::fc(Branch b, std::uint32_t in_dim, TensorShape out, bool relu) {
    LayerSpec s;
    s.kind = LayerKind::FullyConnected;
    s.branch = b;
    s.relu = relu;
    s.in_dim = in_dim;
    s.out_shape = out;
    return s;
}

TensorShape output_shape(const LayerSpec& spec, const TensorShape& in) {
    if (spec.kind == LayerKind::FullyConnected) {
        if (spec.in_dim != in.size()) {
            fail(ErrorKind::Model, fmt::format("fully connected layer expects {} inputs, previous layer gives {}",
                                               spec.in_dim, in.size()));
        }
        if (spec.out_shape.size() == 0) {
            fail(ErrorKind::Model, "fully connected layer has an empty output shape");
        }
        return spec.out_shape;
    }
    if (spec.in_channels != in.channels) {
        fail(ErrorKind::Model, fmt::format("convolution expects {} channels, previous layer gives {}",
                                           spec.in_channels, in.channels));
    }
    if (spec.out_channels == 0 || spec.kernel_h == 0 || spec.kernel_w == 0 || spec.stride_h == 0 ||
        spec.stride_w == 0) {
        fail(ErrorKind::Model, "convolution with zero channels, kernel or stride");
    }
    const auto h = static_cast<long>(in.height);
    const auto w = static_cast<long>(in.width);
    long oh = 0;
    long ow = 0;
    if (spec.kind == LayerKind::Conv) {
        const long nh = h + 2L * spec.pad_h - spec.kernel_h;
        const long nw = w + 2L * spec.pad_w - spec.kernel_w;
        if (nh < 0 || nw < 0) {
            fail(ErrorKind::Model, "convolution kernel larger than its padded input");
        }
        oh = nh / spec.stride_h + 1;
        ow = nw / spec.stride_w + 1;
    } else {
        oh = (h - 1) * spec.stride_h - 2L * spec.pad_h + spec.kernel_h;
        ow = (w - 1) * spec.stride_w - 2L * spec.pad_w + spec.kernel_w;
        if (oh < 1 || ow < 1) {
            fail(ErrorKind::Model, "transposed convolution produces an empty output");
        }
    }
    return {spec.out_channels, static_cast<std::uint32_t>(oh), static_cast<std::uint32_t>(ow)};
}

void validate_topology(const TensorShape& input, const std::vector<LayerSpec>& specs) {
    if (input.size() == 0) {
        fail(ErrorKind::Model, "model input shape is empty");
    }
    // branch tags must be Shared..., Vx..., Vy...
    std::size_t k = 0;
    TensorShape shape = input;
    for (; k < specs.size() && specs[k].branch == Branch::Shared; ++k) {
        try {
            shape = output_shape(specs[k], shape);
        } catch (const Error& e) {
            fail(ErrorKind::Model, fmt::format("layer {}: {}", k, e.what()));
        }
    }
    const TensorShape shared = shape;
    const TensorShape target{1, input.height, input.width};
    for (Branch branch : {Branch::Vx, Branch::Vy}) {
        const std::size_t first = k;
        shape = shared;
        for (; k < specs.size() && specs[k].branch == branch; ++k) {
            try {
                shape = output_shape(specs[k], shape);
            } catch (const Error& e) {
                fail(ErrorKind::Model, fmt::format("layer {}: {}", k, e.what()));
            }
        }
        const char* label = branch == Branch::Vx ? "vx" : "vy";
        if (k == first) {
            fail(ErrorKind::Model, fmt::format("decoder branch {} is missing or out of order", label));
        }
        if (!(shape == target)) {
            fail(ErrorKind::Model, fmt::format("decoder branch {} ends at {}x{}x{}, expected 1x{}x{}", label,
                                               shape.channels, shape.height, shape.width, input.height,
                                               input.width));
        }
    }
    if (k != specs.size()) {
        fail(ErrorKind::Model, fmt::format("layer {} has an unexpected branch tag", k));
    }
}

CnnModel::CnnModel(TensorShape input, std::vector<Layer> layers) : input_(input), layers_(std::move(layers)) {
    std::vector<LayerSpec> specs;
    specs.reserve(layers_.size());
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& l = layers_[k];
        if (l.weights.size() != l.spec.weight_count() || l.bias.size() != l.spec.bias_count()) {
            fail(ErrorKind::Model, fmt::format("layer {}: tensor sizes do not match its descriptor", k));
        }
        specs.push_back(l.spec);
    }
    validate_topology(input_, specs);
}

std::size_t CnnModel::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) {
        n += l.weights.size() + l.bias.size();
    }
    return n;
}

std::vector<LayerSpec> default_architecture(std::uint32_t height, std::uint32_t width) {
    using B = Branch;
    const std::uint32_t h8 = height / 8;
    const std::uint32_t w8 = width / 8;
    std::vector<LayerSpec> s{
        LayerSpec::conv(B::Shared, 3, 64, 4, 2, 1),
        LayerSpec::conv(B::Shared, 64, 128, 4, 2, 1),
        LayerSpec::conv(B::Shared, 128, 256, 4, 2, 1),
        LayerSpec::conv(B::Shared, 256, 16, 3, 1, 1),
        LayerSpec::fc(B::Shared, 16 * h8 * w8, {1024, 1, 1}),
        LayerSpec::fc(B::Shared, 1024, {16, h8, w8}),
    };
    for (B b : {B::Vx, B::Vy}) {
        s.push_back(LayerSpec::tconv(b, 16, 128, 4, 2, 1));
        s.push_back(LayerSpec::tconv(b, 128, 64, 4, 2, 1));
        s.push_back(LayerSpec::tconv(b, 64, 32, 4, 2, 1));
        s.push_back(LayerSpec::tconv(b, 32, 1, 3, 1, 1, false));
    }
    return s;
}

CnnModel random_model(const TensorShape& input, const std::vector<LayerSpec>& specs, std::uint64_t seed) {
    validate_topology(input, specs);
    CounterRng rng(seed);
    std::vector<Layer> layers;
    for (const auto& spec : specs) {
        Layer l{spec, std::vector<float>(spec.weight_count()), std::vector<float>(spec.bias_count())};
        const double fan_in = spec.kind == LayerKind::FullyConnected
                                  ? static_cast<double>(spec.in_dim)
                                  : static_cast<double>(spec.in_channels) * spec.kernel_h * spec.kernel_w;
        const double a = 1.0 / std::sqrt(fan_in);
        for (float& w : l.weights) w = static_cast<float>(rng.uniform(-a, a));
        for (float& b : l.bias) b = static_cast<float>(rng.uniform(-a, a));
        layers.push_back(std::move(l));
    }
    return CnnModel(input, std::move(layers));
}

namespace {

void apply_conv(const Layer& layer, const TensorShape& in_shape, const std::vector<float>& in,
                const TensorShape& out_shape, std::vector<double>& acc) {
    const auto& s = layer.spec;
    const long ih = in_shape.height;
    const long iw = in_shape.width;
    const long oh = out_shape.height;
    const long ow = out_shape.width;
    const long plane = oh * ow;
    for (std::uint32_t o = 0; o < s.out_channels; ++o) {
        double* dst = acc.data() + o * plane;
        std::fill(dst, dst + plane, static_cast<double>(layer.bias[o]));
        for (std::uint32_t c = 0; c < s.in_channels; ++c) {
            const float* src = in.data() + static_cast<std::size_t>(c) * ih * iw;
            for (std::uint32_t ky = 0; ky < s.kernel_h; ++ky) {
                for (std::uint32_t kx = 0; kx < s.kernel_w; ++kx) {
                    const std::size_t widx =
                        ((static_cast<std::size_t>(o) * s.in_channels + c) * s.kernel_h + ky) * s.kernel_w + kx;
                    const double w = layer.weights[widx];
                    if (w == 0.0) {
                        continue;
                    }
                    for (long y = 0; y < oh; ++y) {
                        const long sy = y * s.stride_h - static_cast<long>(s.pad_h) + ky;
                        if (sy < 0 || sy >= ih) {
                            continue;
                        }
                        const float* row = src + sy * iw;
                        double* out = dst + y * ow;
                        for (long x = 0; x < ow; ++x) {
                            const long sx = x * s.stride_w - static_cast<long>(s.pad_w) + kx;
                            if (sx >= 0 && sx < iw) {
                                out[x] += w * static_cast<double>(row[sx]);
                            }
                        }
                    }
                }
            }
        }
    }
}

void apply_tconv(const Layer& layer, const TensorShape& in_shape, const std::vector<float>& in,
                 const TensorShape& out_shape, std::vector<double>& acc) {
    const auto& s = layer.spec;
    const long ih = in_shape.height;
    const long iw = in_shape.width;
    const long oh = out_shape.height;
    const long ow = out_shape.width;
    const long plane = oh * ow;
    for (std::uint32_t o = 0; o < s.out_channels; ++o) {
        double* dst = acc.data() + o * plane;
        std::fill(dst, dst + plane, static_cast<double>(layer.bias[o]));
        for (std::uint32_t c = 0; c < s.in_channels; ++c) {
            const float* src = in.data() + static_cast<std::size_t>(c) * ih * iw;
            for (std::uint32_t ky = 0; ky < s.kernel_h; ++ky) {
                for (std::uint32_t kx = 0; kx < s.kernel_w; ++kx) {
                    const std::size_t widx =
                        ((static_cast<std::size_t>(o) * s.in_channels + c) * s.kernel_h + ky) * s.kernel_w + kx;
                    const double w = layer.weights[widx];
                    if (w == 0.0) {
                        continue;
                    }
                    for (long y = 0; y < ih; ++y) {
                        const long ty = y * s.stride_h - static_cast<long>(s.pad_h) + ky;
                        if (ty < 0 || ty >= oh) {
                            continue;
                        }
                        const float* row = src + y * iw;
                        double* out = dst + ty * ow;
                        for (long x = 0; x < iw; ++x) {
                            const long tx = x * s.stride_w - static_cast<long>(s.pad_w) + kx;
                            if (tx >= 0 && tx < ow) {
                                out[tx] += w * static_cast<double>(row[x]);
                            }
                        }
                    }
                }
            }
        }
    }
}

void apply_fc(const Layer& layer, const std::vector<float>& in, std::vector<double>& acc) {
    const std::size_t n_out = layer.spec.out_shape.size();
    const std::size_t n_in = layer.spec.in_dim;
    for (std::size_t o = 0; o < n_out; ++o) {
        double sum = layer.bias[o];
        const float* w = layer.weights.data() + o * n_in;
        for (std::size_t k = 0; k < n_in; ++k) {
            sum += static_cast<double>(w[k]) * static_cast<double>(in[k]);
        }
        acc[o] = sum;
    }
}

std::vector<float> run_layer(const Layer& layer, std::size_t index, const TensorShape& in_shape,
                             const std::vector<float>& in, TensorShape& out_shape) {
    out_shape = output_shape(layer.spec, in_shape);
    std::vector<double> acc(out_shape.size());
    switch (layer.spec.kind) {
        case LayerKind::Conv: apply_conv(layer, in_shape, in, out_shape, acc); break;
        case LayerKind::TransposedConv: apply_tconv(layer, in_shape, in, out_shape, acc); break;
        case LayerKind::FullyConnected: apply_fc(layer, in, acc); break;
    }
    std::vector<float> out(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) {
        double v = acc[k];
        if (layer.spec.relu && v < 0.0) {
            v = 0.0;
        }
        const auto f = static_cast<float>(v);
        if (!std::isfinite(f)) {
            fail(ErrorKind::Numeric, fmt::format("non-finite activation in layer {} at element {}", index, k));
        }
        out[k] = f;
    }
    return out;
}

}  // namespace

std::array<std::vector<float>, 2> forward_tensor(const CnnModel& model, const std::vector<float>& input) {
    if (input.size() != model.input_shape().size()) {
        fail(ErrorKind::Model, fmt::format("input tensor has {} elements, model expects {}", input.size(),
                                           model.input_shape().size()));
    }
    const auto& layers = model.layers();
    std::size_t k = 0;
    TensorShape shape = model.input_shape();
    std::vector<float> act = input;
    for (; k < layers.size() && layers[k].spec.branch == Branch::Shared; ++k) {
        TensorShape next;
        act = run_layer(layers[k], k, shape, act, next);
        shape = next;
    }
    std::array<std::vector<float>, 2> out;
    for (int b = 0; b < 2; ++b) {
        const Branch branch = b == 0 ? Branch::Vx : Branch::Vy;
        TensorShape bshape = shape;
        std::vector<float> bact = act;
        for (; k < layers.size() && layers[k].spec.branch == branch; ++k) {
            TensorShape next;
            bact = run_layer(layers[k], k, bshape, bact, next);
            bshape = next;
        }
        out[static_cast<std::size_t>(b)] = std::move(bact);
    }
    return out;
}

std::vector<float> input_tensor(const SolverInput& input) {
    const auto& g = input.grid();
    const std::size_t plane = g.size();
    std::vector<float> t(3 * plane);
    for (int j = 0; j < g.height; ++j) {
        for (int i = 0; i < g.width; ++i) {
            const std::size_t p = static_cast<std::size_t>(j) * g.width + i;
            t[p] = static_cast<float>(input.sdf(i, j));
            t[plane + p] = static_cast<float>(input.boundary.vx(i, j));
            t[2 * plane + p] = static_cast<float>(input.boundary.vy(i, j));
        }
    }
    return t;
}

VelocityField cnn_forward(const CnnModel& model, const SolverInput& input) {
    const auto& g = input.grid();
    const TensorShape expected{3, static_cast<std::uint32_t>(g.height), static_cast<std::uint32_t>(g.width)};
    if (!(model.input_shape() == expected)) {
        fail(ErrorKind::Model, fmt::format("model input is {}x{}x{}, subdomain gives 3x{}x{}",
                                           model.input_shape().channels, model.input_shape().height,
                                           model.input_shape().width, g.height, g.width));
    }
    const auto out = forward_tensor(model, input_tensor(input));
    VelocityField v(g);
    for (int j = 0; j < g.height; ++j) {
        for (int i = 0; i < g.width; ++i) {
            const std::size_t p = static_cast<std::size_t>(j) * g.width + i;
            v.vx(i, j) = out[0][p];
            v.vy(i, j) = out[1][p];
        }
    }
    return v;
}

std::uint64_t tensor_hash(const std::vector<float>& a, const std::vector<float>& b) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto* t : {&a, &b}) {
        for (float f : *t) {
            const auto bits = std::bit_cast<std::uint32_t>(f);
            for (int k = 0; k < 4; ++k) {
                h ^= (bits >> (8 * k)) & 0xffU;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

}  // namespace flowdd::usds
