#include <algorithm>

#include <fmt/format.h>

#include "capstore/error.hpp"
#include "capstore/workload.hpp"

// Closed-form workload generator for a 16x16-style systolic array.
//
// Conv layers (input HxWxC, kernel k, stride s, Cout filters, array RxK):
//   out side      = (in - k) / s + 1
//   weight bytes  = resident filters * k*k*C        (one K-wide filter tile
//                                                    under weight reuse)
//   data bytes    = k*W*C band under weight reuse, whole input otherwise
//   acc bytes     = Ho*Wo*Cout partial sums
//   cycles        = tiles * (Ho*Wo + R + K - 2)     (fill/drain per tile)
//
// Class capsules keep every prediction vector resident in the accumulator
// because the routing loop reads them back each iteration. All byte counts
// are multiplied by the word size; access counts are in words.

namespace capstore {
namespace {

using u64 = std::uint64_t;

u64 ceil_div(u64 a, u64 b) { return (a + b - 1) / b; }

struct ConvShape {
  u64 h, w, c;
};

WorkloadOp conv_op(OpKind kind, const ConvShape& in, const ConvLayer& layer,
                   const CapsNetSpec& spec, bool weight_reuse, ConvShape* out) {
  const u64 k = layer.kernel;
  if (k > in.h || k > in.w) {
    throw InputError(fmt::format("generate_workload: {} kernel {} larger than input {}x{}",
                                 op_name(kind), k, in.h, in.w));
  }
  const u64 ho = (in.h - k) / layer.stride + 1;
  const u64 wo = (in.w - k) / layer.stride + 1;
  const u64 cout = layer.out_channels;
  const u64 rows = spec.array_rows;
  const u64 cols = spec.array_cols;
  const u64 word = spec.word_bytes;
  const u64 filter = k * k * in.c;

  WorkloadOp op;
  op.kind = kind;
  const u64 resident_filters = weight_reuse ? std::min(cout, cols) : cout;
  op.footprint.weight = resident_filters * filter * word;
  op.footprint.data = (weight_reuse ? k * in.w * in.c : in.h * in.w * in.c) * word;
  op.footprint.acc = ho * wo * cout * word;

  const u64 out_tiles = ceil_div(cout, cols);
  const u64 in_tiles = ceil_div(filter, rows);
  op.reads.weight = filter * cout * (weight_reuse ? 1 : ho * wo);
  op.reads.data = ho * wo * filter * out_tiles;
  op.reads.acc = ho * wo * cout * in_tiles;
  op.writes.weight = filter * cout;
  op.writes.data = in.h * in.w * in.c;
  op.writes.acc = op.reads.acc;
  op.cycles = out_tiles * in_tiles * (ho * wo + rows + cols - 2);

  *out = {ho, wo, cout};
  return op;
}

void require_positive(u64 v, const char* what) {
  if (v == 0) throw InputError(fmt::format("generate_workload: {} must be positive", what));
}

}  // namespace

Workload generate_workload(const CapsNetSpec& spec, const ReusePolicy& policy) {
  require_positive(spec.input_height, "input_height");
  require_positive(spec.input_width, "input_width");
  require_positive(spec.input_channels, "input_channels");
  for (const ConvLayer* l : {&spec.conv1, &spec.primary}) {
    require_positive(l->kernel, "kernel");
    require_positive(l->stride, "stride");
    require_positive(l->out_channels, "out_channels");
  }
  require_positive(spec.primary_capsule_dim, "primary_capsule_dim");
  require_positive(spec.primary_capsule_types, "primary_capsule_types");
  require_positive(spec.class_in_capsules, "class_in_capsules");
  require_positive(spec.class_out_capsules, "class_out_capsules");
  require_positive(spec.class_in_dim, "class_in_dim");
  require_positive(spec.class_out_dim, "class_out_dim");
  require_positive(spec.word_bytes, "word_bytes");
  require_positive(spec.array_rows, "array_rows");
  require_positive(spec.array_cols, "array_cols");
  require_positive(spec.routing_iterations, "routing_iterations");

  if (u64{spec.primary_capsule_types} * spec.primary_capsule_dim != spec.primary.out_channels) {
    throw InputError("generate_workload: primary out_channels != capsule_types * capsule_dim");
  }
  if (spec.class_in_dim != spec.primary_capsule_dim) {
    throw InputError("generate_workload: class_in_dim != primary_capsule_dim");
  }

  Workload w;
  w.routing_iterations = spec.routing_iterations;

  ConvShape c1_out{};
  ConvShape pc_out{};
  const ConvShape input{spec.input_height, spec.input_width, spec.input_channels};
  w.ops.push_back(conv_op(OpKind::C1, input, spec.conv1, spec, policy.weight_reuse_conv, &c1_out));
  w.ops.push_back(conv_op(OpKind::PC, c1_out, spec.primary, spec, policy.weight_reuse_conv, &pc_out));

  const u64 capsules = pc_out.h * pc_out.w * spec.primary_capsule_types;
  if (capsules != spec.class_in_capsules) {
    throw InputError(fmt::format(
        "generate_workload: primary layer yields {} capsules, class layer expects {}",
        capsules, spec.class_in_capsules));
  }

  const u64 ni = spec.class_in_capsules;
  const u64 nj = spec.class_out_capsules;
  const u64 din = spec.class_in_dim;
  const u64 dout = spec.class_out_dim;
  const u64 rows = spec.array_rows;
  const u64 cols = spec.array_cols;
  const u64 word = spec.word_bytes;
  const u64 fill = rows + cols - 2;
  const u64 batch = std::min(ni, rows);
  const u64 predictions = ni * nj * dout;

  WorkloadOp cc;
  cc.kind = OpKind::CCFC;
  cc.footprint.weight = batch * nj * din * dout * word;
  cc.footprint.data = (policy.data_reuse_classcaps ? batch : ni) * din * word;
  cc.footprint.acc = predictions * word;
  cc.reads.weight = ni * nj * din * dout;
  cc.reads.data = policy.data_reuse_classcaps ? ni * din : ni * nj * din;
  cc.reads.acc = predictions * ceil_div(din, rows);
  cc.writes.weight = cc.reads.weight;
  cc.writes.data = ni * din;
  cc.writes.acc = cc.reads.acc;
  cc.cycles = ceil_div(ni * nj * din * dout, rows * cols) + fill;
  w.ops.push_back(cc);

  WorkloadOp ss;
  ss.kind = OpKind::SumSquash;
  ss.footprint.weight = ni * nj * word;  // coupling coefficients
  ss.footprint.data = nj * dout * word;  // squashed outputs
  ss.footprint.acc = (predictions + nj * dout) * word;
  ss.reads.weight = ni * nj;
  ss.reads.acc = predictions;
  ss.writes.data = nj * dout;
  ss.writes.acc = nj * dout;
  ss.cycles = ceil_div(predictions, rows * cols) + nj * dout + fill;
  ss.repeat = spec.routing_iterations;
  w.ops.push_back(ss);

  WorkloadOp us;
  us.kind = OpKind::UpdateSum;
  us.footprint.weight = 2 * ni * nj * word;  // logits and coefficients
  us.footprint.data = nj * dout * word;
  us.footprint.acc = predictions * word;
  us.reads.weight = ni * nj;
  us.reads.data = nj * dout * ceil_div(ni, rows);
  us.reads.acc = predictions;
  us.writes.weight = 2 * ni * nj;
  us.cycles = ceil_div(predictions, rows * cols) + ceil_div(ni * nj, cols) + fill;
  us.repeat = spec.routing_iterations;
  w.ops.push_back(us);

  w.label = fmt::format(
      "generated: {}x{}x{} input, array {}x{}, word {} B, weight_reuse_conv={}, "
      "data_reuse_classcaps={}; conv footprints hold one filter tile and a k-row input "
      "band under weight reuse; accumulators hold all partial sums/predictions; "
      "cycles = tiles * (outputs + fill/drain)",
      spec.input_height, spec.input_width, spec.input_channels, spec.array_rows,
      spec.array_cols, spec.word_bytes, policy.weight_reuse_conv,
      policy.data_reuse_classcaps);
  return w;
}

}  // namespace capstore
