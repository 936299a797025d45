#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "scenefuse/error.hpp"
#include "scenefuse/onnx_graph.hpp"

namespace scenefuse::onnx {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorKind::Model, message); }

const Tensor& need(std::span<const Tensor* const> inputs, std::size_t k, const char* what) {
  if (k >= inputs.size() || inputs[k] == nullptr) fail(std::string("missing input ") + what);
  return *inputs[k];
}

const Tensor& need_float(std::span<const Tensor* const> inputs, std::size_t k, const char* what) {
  const Tensor& t = need(inputs, k, what);
  if (t.type != Tensor::Type::Float) fail(std::string("input ") + what + " must be float");
  return t;
}

std::int64_t normalize_axis(std::int64_t axis, std::size_t rank) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < 0) axis += r;
  if (axis < 0 || axis > r) fail("axis out of range");
  return axis;
}

// Spatial geometry shared by Conv and the pooling operators (2-D only).
struct Window {
  std::int64_t kernel_h, kernel_w;
  std::int64_t stride_h, stride_w;
  std::int64_t dilation_h, dilation_w;
  std::int64_t pad_top, pad_left, pad_bottom, pad_right;
  std::int64_t out_h, out_w;
};

Window make_window(const Node& node, std::int64_t in_h, std::int64_t in_w, std::int64_t kernel_h,
                   std::int64_t kernel_w, bool allow_ceil) {
  Window w{};
  w.kernel_h = kernel_h;
  w.kernel_w = kernel_w;
  const auto strides = node.ints_attr("strides", {1, 1});
  const auto dilations = node.ints_attr("dilations", {1, 1});
  if (strides.size() != 2 || dilations.size() != 2) fail("only 2-D spatial operators are supported");
  w.stride_h = strides[0];
  w.stride_w = strides[1];
  w.dilation_h = dilations[0];
  w.dilation_w = dilations[1];
  if (w.stride_h <= 0 || w.stride_w <= 0 || w.dilation_h <= 0 || w.dilation_w <= 0) fail("invalid stride or dilation");

  const std::int64_t span_h = (kernel_h - 1) * w.dilation_h + 1;
  const std::int64_t span_w = (kernel_w - 1) * w.dilation_w + 1;
  const std::string auto_pad = node.string_attr("auto_pad", "NOTSET");

  if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    w.out_h = (in_h + w.stride_h - 1) / w.stride_h;
    w.out_w = (in_w + w.stride_w - 1) / w.stride_w;
    const std::int64_t total_h = std::max<std::int64_t>(0, (w.out_h - 1) * w.stride_h + span_h - in_h);
    const std::int64_t total_w = std::max<std::int64_t>(0, (w.out_w - 1) * w.stride_w + span_w - in_w);
    const bool upper = auto_pad == "SAME_UPPER";
    w.pad_top = upper ? total_h / 2 : total_h - total_h / 2;
    w.pad_bottom = total_h - w.pad_top;
    w.pad_left = upper ? total_w / 2 : total_w - total_w / 2;
    w.pad_right = total_w - w.pad_left;
    return w;
  }

  if (auto_pad == "VALID") {
    w.pad_top = w.pad_left = w.pad_bottom = w.pad_right = 0;
  } else if (auto_pad == "NOTSET" || auto_pad.empty()) {
    const auto pads = node.ints_attr("pads", {0, 0, 0, 0});
    if (pads.size() != 4) fail("pads must have four entries");
    w.pad_top = pads[0];
    w.pad_left = pads[1];
    w.pad_bottom = pads[2];
    w.pad_right = pads[3];
  } else {
    fail("unsupported auto_pad '" + auto_pad + "'");
  }

  const bool ceil_mode = allow_ceil && node.int_attr("ceil_mode", 0) != 0;
  auto out_dim = [&](std::int64_t in, std::int64_t pad_begin, std::int64_t pad_end, std::int64_t span,
                     std::int64_t stride) {
    const std::int64_t extent = in + pad_begin + pad_end - span;
    if (extent < 0) fail("kernel larger than padded input");
    std::int64_t out = (ceil_mode ? (extent + stride - 1) / stride : extent / stride) + 1;
    // A window may not start entirely inside the end padding.
    if (ceil_mode && (out - 1) * stride >= in + pad_begin) --out;
    return out;
  };
  w.out_h = out_dim(in_h, w.pad_top, w.pad_bottom, span_h, w.stride_h);
  w.out_w = out_dim(in_w, w.pad_left, w.pad_right, span_w, w.stride_w);
  return w;
}

void require_rank4(const Tensor& t, const char* op) {
  if (t.shape.size() != 4) fail(std::string(op) + " expects an NCHW tensor, got " + shape_to_string(t.shape));
}

Tensor conv(const Node& node, std::span<const Tensor* const> inputs) {
  const Tensor& x = need_float(inputs, 0, "X");
  const Tensor& weight = need_float(inputs, 1, "W");
  const Tensor* bias = inputs.size() > 2 ? inputs[2] : nullptr;
  require_rank4(x, "Conv");
  if (weight.shape.size() != 4) fail("Conv weight must be 4-D");

  const std::int64_t batch = x.shape[0], channels = x.shape[1], in_h = x.shape[2], in_w = x.shape[3];
  const std::int64_t maps = weight.shape[0], group_channels = weight.shape[1];
  const std::int64_t group = node.int_attr("group", 1);
  if (group <= 0 || channels != group_channels * group || maps % group != 0) {
    fail("Conv channel/group mismatch: input " + shape_to_string(x.shape) + ", weight " +
         shape_to_string(weight.shape));
  }
  const auto kernel = node.ints_attr("kernel_shape", {weight.shape[2], weight.shape[3]});
  if (kernel.size() != 2 || kernel[0] != weight.shape[2] || kernel[1] != weight.shape[3]) {
    fail("Conv kernel_shape disagrees with weight");
  }
  if (bias != nullptr && (bias->type != Tensor::Type::Float || bias->size() != maps)) fail("Conv bias size mismatch");

  const Window w = make_window(node, in_h, in_w, kernel[0], kernel[1], false);
  Tensor out = Tensor::zeros({batch, maps, w.out_h, w.out_w});

  const std::int64_t maps_per_group = maps / group;
  const std::int64_t patch = group_channels * w.kernel_h * w.kernel_w;
  const std::int64_t out_cells = w.out_h * w.out_w;
  const bool pointwise = w.kernel_h == 1 && w.kernel_w == 1 && w.stride_h == 1 && w.stride_w == 1 &&
                         w.pad_top == 0 && w.pad_left == 0 && w.pad_bottom == 0 && w.pad_right == 0;

  std::vector<float> columns;
  if (!pointwise) columns.resize(static_cast<std::size_t>(patch * out_cells));

  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t g = 0; g < group; ++g) {
      const float* src = x.values.data() + ((n * channels + g * group_channels) * in_h * in_w);
      const float* col_data = src;
      if (!pointwise) {
        // im2col: row (c, ky, kx), column (oy, ox).
        for (std::int64_t c = 0; c < group_channels; ++c) {
          for (std::int64_t ky = 0; ky < w.kernel_h; ++ky) {
            for (std::int64_t kx = 0; kx < w.kernel_w; ++kx) {
              float* dst = columns.data() + ((c * w.kernel_h + ky) * w.kernel_w + kx) * out_cells;
              for (std::int64_t oy = 0; oy < w.out_h; ++oy) {
                const std::int64_t iy = oy * w.stride_h - w.pad_top + ky * w.dilation_h;
                for (std::int64_t ox = 0; ox < w.out_w; ++ox) {
                  const std::int64_t ix = ox * w.stride_w - w.pad_left + kx * w.dilation_w;
                  dst[oy * w.out_w + ox] = (iy >= 0 && iy < in_h && ix >= 0 && ix < in_w)
                                               ? src[(c * in_h + iy) * in_w + ix]
                                               : 0.0f;
                }
              }
            }
          }
        }
        col_data = columns.data();
      }
      Eigen::Map<const RowMatrix> kernel_matrix(weight.values.data() + g * maps_per_group * patch, maps_per_group,
                                                patch);
      Eigen::Map<const RowMatrix> column_matrix(col_data, patch, out_cells);
      Eigen::Map<RowMatrix> result(out.values.data() + (n * maps + g * maps_per_group) * out_cells, maps_per_group,
                                   out_cells);
      result.noalias() = kernel_matrix * column_matrix;
      if (bias != nullptr) {
        for (std::int64_t m = 0; m < maps_per_group; ++m) {
          result.row(m).array() += bias->values[static_cast<std::size_t>(g * maps_per_group + m)];
        }
      }
    }
  }
  return out;
}

enum class PoolKind { Max, Average };

Tensor pool(const Node& node, std::span<const Tensor* const> inputs, PoolKind kind) {
  const Tensor& x = need_float(inputs, 0, "X");
  require_rank4(x, "pooling");
  const auto kernel = node.ints_attr("kernel_shape");
  if (kernel.size() != 2) fail("pooling requires a 2-D kernel_shape");
  const std::int64_t batch = x.shape[0], channels = x.shape[1], in_h = x.shape[2], in_w = x.shape[3];
  const Window w = make_window(node, in_h, in_w, kernel[0], kernel[1], true);
  const bool include_pad = node.int_attr("count_include_pad", 0) != 0;

  Tensor out = Tensor::zeros({batch, channels, w.out_h, w.out_w});
  const bool interior = w.pad_top == 0 && w.pad_left == 0 && w.dilation_h == 1 && w.dilation_w == 1 &&
                        (w.out_h - 1) * w.stride_h + w.kernel_h <= in_h && (w.out_w - 1) * w.stride_w + w.kernel_w <= in_w;
  if (kind == PoolKind::Max && interior) {
    for (std::int64_t plane = 0; plane < batch * channels; ++plane) {
      const float* src = x.values.data() + plane * in_h * in_w;
      float* dst = out.values.data() + plane * w.out_h * w.out_w;
      for (std::int64_t oy = 0; oy < w.out_h; ++oy) {
        float* row = dst + oy * w.out_w;
        std::fill(row, row + w.out_w, -std::numeric_limits<float>::infinity());
        for (std::int64_t ky = 0; ky < w.kernel_h; ++ky) {
          const float* line = src + (oy * w.stride_h + ky) * in_w;
          for (std::int64_t ox = 0; ox < w.out_w; ++ox) {
            const float* cell = line + ox * w.stride_w;
            for (std::int64_t kx = 0; kx < w.kernel_w; ++kx) row[ox] = std::max(row[ox], cell[kx]);
          }
        }
      }
    }
    return out;
  }
  for (std::int64_t plane = 0; plane < batch * channels; ++plane) {
    const float* src = x.values.data() + plane * in_h * in_w;
    float* dst = out.values.data() + plane * w.out_h * w.out_w;
    for (std::int64_t oy = 0; oy < w.out_h; ++oy) {
      for (std::int64_t ox = 0; ox < w.out_w; ++ox) {
        float best = -std::numeric_limits<float>::infinity();
        double sum = 0.0;
        std::int64_t count = 0;
        std::int64_t padded_count = 0;
        for (std::int64_t ky = 0; ky < w.kernel_h; ++ky) {
          const std::int64_t iy = oy * w.stride_h - w.pad_top + ky * w.dilation_h;
          for (std::int64_t kx = 0; kx < w.kernel_w; ++kx) {
            const std::int64_t ix = ox * w.stride_w - w.pad_left + kx * w.dilation_w;
            const bool in_padded = iy < in_h + w.pad_bottom && ix < in_w + w.pad_right;
            if (in_padded) ++padded_count;
            if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) continue;
            const float v = src[iy * in_w + ix];
            best = std::max(best, v);
            sum += v;
            ++count;
          }
        }
        if (kind == PoolKind::Max) {
          dst[oy * w.out_w + ox] = best;
        } else {
          const std::int64_t divisor = include_pad ? padded_count : count;
          dst[oy * w.out_w + ox] = divisor > 0 ? static_cast<float>(sum / static_cast<double>(divisor)) : 0.0f;
        }
      }
    }
  }
  return out;
}

Tensor global_average_pool(std::span<const Tensor* const> inputs) {
  const Tensor& x = need_float(inputs, 0, "X");
  if (x.shape.size() < 3) fail("GlobalAveragePool expects rank >= 3");
  const std::int64_t planes = x.shape[0] * x.shape[1];
  const std::int64_t cells = x.size() / planes;
  Shape shape = x.shape;
  std::fill(shape.begin() + 2, shape.end(), 1);
  Tensor out = Tensor::zeros(shape);
  for (std::int64_t p = 0; p < planes; ++p) {
    double sum = 0.0;
    for (std::int64_t k = 0; k < cells; ++k) sum += x.values[static_cast<std::size_t>(p * cells + k)];
    out.values[static_cast<std::size_t>(p)] = static_cast<float>(sum / static_cast<double>(cells));
  }
  return out;
}

std::vector<std::int64_t> strides_of(const Shape& shape) {
  std::vector<std::int64_t> strides(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) strides[k - 1] = strides[k] * shape[k];
  return strides;
}

Tensor transpose(const Node& node, std::span<const Tensor* const> inputs) {
  const Tensor& x = need(inputs, 0, "data");
  const std::size_t rank = x.shape.size();
  std::vector<std::int64_t> perm = node.ints_attr("perm");
  if (perm.empty()) {
    perm.resize(rank);
    std::iota(perm.rbegin(), perm.rend(), 0);
  }
  if (perm.size() != rank) fail("Transpose perm rank mismatch");

  Shape out_shape(rank);
  for (std::size_t k = 0; k < rank; ++k) out_shape[k] = x.shape[static_cast<std::size_t>(perm[k])];
  const auto in_strides = strides_of(x.shape);
  std::vector<std::int64_t> gather(rank);
  for (std::size_t k = 0; k < rank; ++k) gather[k] = in_strides[static_cast<std::size_t>(perm[k])];

  Tensor out;
  out.type = x.type;
  out.shape = out_shape;
  const std::int64_t total = x.size();
  if (x.type == Tensor::Type::Float) out.values.resize(static_cast<std::size_t>(total));
  else out.ints.resize(static_cast<std::size_t>(total));

  std::vector<std::int64_t> index(rank, 0);
  for (std::int64_t flat = 0; flat < total; ++flat) {
    std::int64_t src = 0;
    for (std::size_t k = 0; k < rank; ++k) src += index[k] * gather[k];
    if (x.type == Tensor::Type::Float) out.values[static_cast<std::size_t>(flat)] = x.values[static_cast<std::size_t>(src)];
    else out.ints[static_cast<std::size_t>(flat)] = x.ints[static_cast<std::size_t>(src)];
    for (std::size_t k = rank; k-- > 0;) {
      if (++index[k] < out_shape[k]) break;
      index[k] = 0;
    }
  }
  return out;
}

Tensor broadcast_binary(std::span<const Tensor* const> inputs, const std::function<float(float, float)>& op) {
  const Tensor& a = need_float(inputs, 0, "A");
  const Tensor& b = need_float(inputs, 1, "B");
  const std::size_t rank = std::max(a.shape.size(), b.shape.size());
  auto padded = [rank](const Shape& s) {
    Shape p(rank - s.size(), 1);
    p.insert(p.end(), s.begin(), s.end());
    return p;
  };
  const Shape sa = padded(a.shape), sb = padded(b.shape);
  Shape out_shape(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    if (sa[k] != sb[k] && sa[k] != 1 && sb[k] != 1) {
      fail("cannot broadcast " + shape_to_string(a.shape) + " with " + shape_to_string(b.shape));
    }
    out_shape[k] = std::max(sa[k], sb[k]);
  }
  auto broadcast_strides = [&](const Shape& s) {
    auto st = strides_of(s);
    for (std::size_t k = 0; k < rank; ++k) if (s[k] == 1) st[k] = 0;
    return st;
  };
  const auto st_a = broadcast_strides(sa), st_b = broadcast_strides(sb);

  Tensor out = Tensor::zeros(out_shape);
  std::vector<std::int64_t> index(rank, 0);
  const std::int64_t total = out.size();
  for (std::int64_t flat = 0; flat < total; ++flat) {
    std::int64_t ia = 0, ib = 0;
    for (std::size_t k = 0; k < rank; ++k) {
      ia += index[k] * st_a[k];
      ib += index[k] * st_b[k];
    }
    out.values[static_cast<std::size_t>(flat)] = op(a.values[static_cast<std::size_t>(ia)], b.values[static_cast<std::size_t>(ib)]);
    for (std::size_t k = rank; k-- > 0;) {
      if (++index[k] < out_shape[k]) break;
      index[k] = 0;
    }
  }
  return out;
}

Tensor constant(const Node& node) {
  if (const Attribute* a = node.find("value"); a && a->t) return *a->t;
  Tensor t;
  if (const Attribute* a = node.find("value_float")) {
    t.values = {a->f};
  } else if (const Attribute* a = node.find("value_floats")) {
    t.shape = {static_cast<std::int64_t>(a->floats.size())};
    t.values = a->floats;
  } else if (const Attribute* a = node.find("value_int")) {
    t.type = Tensor::Type::Int64;
    t.ints = {a->i};
  } else if (const Attribute* a = node.find("value_ints")) {
    t.type = Tensor::Type::Int64;
    t.shape = {static_cast<std::int64_t>(a->ints.size())};
    t.ints = a->ints;
  } else {
    fail("Constant without a supported value attribute");
  }
  return t;
}

Tensor with_shape(const Tensor& x, Shape shape) {
  Tensor out = x;
  out.shape = std::move(shape);
  return out;
}

Tensor flatten(const Node& node, std::span<const Tensor* const> inputs) {
  const Tensor& x = need(inputs, 0, "input");
  const std::int64_t axis = normalize_axis(node.int_attr("axis", 1), x.shape.size());
  std::int64_t outer = 1;
  for (std::int64_t k = 0; k < axis; ++k) outer *= x.shape[static_cast<std::size_t>(k)];
  return with_shape(x, {outer, x.size() / std::max<std::int64_t>(outer, 1)});
}

Tensor reshape(std::span<const Tensor* const> inputs) {
  const Tensor& x = need(inputs, 0, "data");
  const Tensor& target = need(inputs, 1, "shape");
  if (target.type != Tensor::Type::Int64) fail("Reshape shape must be int64");
  Shape shape = target.ints;
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (shape[k] == 0) {
      if (k >= x.shape.size()) fail("Reshape copies a dimension the input lacks");
      shape[k] = x.shape[k];
    }
    if (shape[k] == -1) {
      if (infer >= 0) fail("Reshape with more than one -1");
      infer = static_cast<int>(k);
    } else {
      known *= shape[k];
    }
  }
  if (infer >= 0) {
    if (known == 0 || x.size() % known != 0) fail("Reshape cannot infer dimension");
    shape[static_cast<std::size_t>(infer)] = x.size() / known;
  }
  if (element_count(shape) != x.size()) {
    fail("Reshape " + shape_to_string(x.shape) + " to " + shape_to_string(shape) + " changes element count");
  }
  return with_shape(x, shape);
}

Tensor gemm(const Node& node, std::span<const Tensor* const> inputs) {
  const Tensor& a = need_float(inputs, 0, "A");
  const Tensor& b = need_float(inputs, 1, "B");
  const Tensor* c = inputs.size() > 2 ? inputs[2] : nullptr;
  if (a.shape.size() != 2 || b.shape.size() != 2) fail("Gemm expects 2-D operands");
  const bool trans_a = node.int_attr("transA", 0) != 0;
  const bool trans_b = node.int_attr("transB", 0) != 0;
  const float alpha = node.float_attr("alpha", 1.0f);
  const float beta = node.float_attr("beta", 1.0f);

  Eigen::Map<const RowMatrix> ma(a.values.data(), a.shape[0], a.shape[1]);
  Eigen::Map<const RowMatrix> mb(b.values.data(), b.shape[0], b.shape[1]);
  RowMatrix lhs = trans_a ? RowMatrix(ma.transpose()) : RowMatrix(ma);
  RowMatrix rhs = trans_b ? RowMatrix(mb.transpose()) : RowMatrix(mb);
  if (lhs.cols() != rhs.rows()) fail("Gemm inner dimension mismatch");

  Tensor out = Tensor::zeros({lhs.rows(), rhs.cols()});
  Eigen::Map<RowMatrix> result(out.values.data(), lhs.rows(), rhs.cols());
  result.noalias() = alpha * (lhs * rhs);
  if (c != nullptr) {
    if (c->type != Tensor::Type::Float) fail("Gemm bias must be float");
    Tensor scaled_c = *c;
    for (float& v : scaled_c.values) v *= beta;
    const Tensor* parts[] = {&out, &scaled_c};
    return broadcast_binary(parts, std::plus<float>());
  }
  return out;
}

Tensor matmul(std::span<const Tensor* const> inputs) {
  const Tensor& a = need_float(inputs, 0, "A");
  const Tensor& b = need_float(inputs, 1, "B");
  if (a.shape.size() < 2 || b.shape.size() != 2) fail("MatMul supports N-D x 2-D operands only");
  const std::int64_t k = a.shape.back();
  if (k != b.shape[0]) fail("MatMul inner dimension mismatch");
  const std::int64_t rows = a.size() / k;
  Shape shape = a.shape;
  shape.back() = b.shape[1];
  Tensor out = Tensor::zeros(shape);
  Eigen::Map<const RowMatrix> ma(a.values.data(), rows, k);
  Eigen::Map<const RowMatrix> mb(b.values.data(), k, b.shape[1]);
  Eigen::Map<RowMatrix>(out.values.data(), rows, b.shape[1]).noalias() = ma * mb;
  return out;
}

Tensor softmax(const Node& node, std::span<const Tensor* const> inputs, std::int64_t opset) {
  const Tensor& x = need_float(inputs, 0, "input");
  const std::size_t rank = x.shape.size();
  const bool legacy = opset > 0 && opset < 13;
  const std::int64_t axis = normalize_axis(node.int_attr("axis", legacy ? 1 : -1), rank);
  if (axis == static_cast<std::int64_t>(rank)) fail("Softmax axis out of range");

  // Legacy semantics flatten to [outer, inner] at `axis`; opset 13 reduces
  // along the single axis only.
  std::int64_t outer = 1, length = 1, inner = 1;
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(rank); ++k) {
    const std::int64_t d = x.shape[static_cast<std::size_t>(k)];
    if (k < axis) outer *= d;
    else if (legacy || k == axis) length *= d;
    else inner *= d;
  }
  Tensor out = x;
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      auto at = [&](std::int64_t l) -> float& {
        return out.values[static_cast<std::size_t>((o * length + l) * inner + in)];
      };
      float peak = -std::numeric_limits<float>::infinity();
      for (std::int64_t l = 0; l < length; ++l) peak = std::max(peak, at(l));
      double sum = 0.0;
      for (std::int64_t l = 0; l < length; ++l) {
        at(l) = std::exp(at(l) - peak);
        sum += at(l);
      }
      for (std::int64_t l = 0; l < length; ++l) at(l) = static_cast<float>(at(l) / sum);
    }
  }
  return out;
}

// Brace-initialising the result vector would copy the tensor.
std::vector<Tensor> single(Tensor t) {
  std::vector<Tensor> out;
  out.push_back(std::move(t));
  return out;
}

}  // namespace

std::vector<Tensor> execute_node(const Node& node, std::span<const Tensor* const> inputs, std::int64_t opset) {
  const std::string& op = node.op_type;
  if (op == "Conv") return single(conv(node, inputs));
  if (op == "Relu") {
    Tensor out = need_float(inputs, 0, "X");
    for (float& v : out.values) v = std::max(v, 0.0f);
    return single(std::move(out));
  }
  if (op == "MaxPool") return single(pool(node, inputs, PoolKind::Max));
  if (op == "AveragePool") return single(pool(node, inputs, PoolKind::Average));
  if (op == "GlobalAveragePool") return single(global_average_pool(inputs));
  if (op == "Transpose") return single(transpose(node, inputs));
  if (op == "Identity" || op == "Dropout") return single(need(inputs, 0, "input"));
  if (op == "Add") return single(broadcast_binary(inputs, std::plus<float>()));
  if (op == "Sub") return single(broadcast_binary(inputs, std::minus<float>()));
  if (op == "Mul") return single(broadcast_binary(inputs, std::multiplies<float>()));
  if (op == "Div") return single(broadcast_binary(inputs, std::divides<float>()));
  if (op == "Constant") return single(constant(node));
  if (op == "Flatten") return single(flatten(node, inputs));
  if (op == "Reshape") return single(reshape(inputs));
  if (op == "Gemm") return single(gemm(node, inputs));
  if (op == "MatMul") return single(matmul(inputs));
  if (op == "Softmax") return single(softmax(node, inputs, opset));
  fail("unsupported operator '" + op + "'");
}

}  // namespace scenefuse::onnx
