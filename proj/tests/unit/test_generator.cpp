#include <gtest/gtest.h>

#include "capstore/error.hpp"
#include "capstore/workload.hpp"

using namespace capstore;

TEST(Generator, MnistPeakIsPrimaryCaps) {
  const Workload w = generate_workload(CapsNetSpec::mnist());
  ASSERT_EQ(w.ops.size(), 5u);
  const auto s = footprint_stats(w);
  EXPECT_EQ(w.ops[s.max_total.op_index].kind, OpKind::PC);
  EXPECT_EQ(w.ops[0].total_footprint(), 103948u);
  EXPECT_EQ(w.ops[1].total_footprint(), 387072u);
  EXPECT_EQ(w.ops[2].total_footprint(), 204928u);
  EXPECT_EQ(w.ops[3].repeat, 3u);
}

TEST(Generator, ClassCapsDataSmallerThanPrimary) {
  const Workload w = generate_workload(CapsNetSpec::mnist());
  EXPECT_LT(w.ops[2].footprint.data, w.ops[1].footprint.data);
  EXPECT_EQ(w.ops[2].footprint.data, 128u);
}

TEST(Generator, UnitNetwork) {
  CapsNetSpec s;
  s.input_height = s.input_width = s.input_channels = 1;
  s.conv1 = {1, 1, 1};
  s.primary = {1, 1, 1};
  s.primary_capsule_dim = s.primary_capsule_types = 1;
  s.class_in_capsules = s.class_out_capsules = 1;
  s.class_in_dim = s.class_out_dim = 1;
  s.word_bytes = 1;
  const Workload w = generate_workload(s);
  const WorkloadOp& c1 = w.ops[0];
  EXPECT_EQ(c1.footprint, (PerComponent{1, 1, 1}));
  EXPECT_EQ(c1.reads, (PerComponent{1, 1, 1}));
  EXPECT_EQ(c1.writes, (PerComponent{1, 1, 1}));
}

TEST(Generator, WithoutReuseFootprintsGrow) {
  const Workload a = generate_workload(CapsNetSpec::mnist());
  const Workload b = generate_workload(CapsNetSpec::mnist(), {false, false});
  EXPECT_GT(b.ops[1].footprint.weight, a.ops[1].footprint.weight);
  EXPECT_GT(b.ops[2].footprint.data, a.ops[2].footprint.data);
}

TEST(Generator, RejectsInconsistentSpecs) {
  CapsNetSpec s = CapsNetSpec::mnist();
  s.class_in_capsules = 1000;
  EXPECT_THROW(generate_workload(s), InputError);
  s = CapsNetSpec::mnist();
  s.conv1.kernel = 40;
  EXPECT_THROW(generate_workload(s), InputError);
  s = CapsNetSpec::mnist();
  s.primary_capsule_types = 16;
  EXPECT_THROW(generate_workload(s), InputError);
  s = CapsNetSpec::mnist();
  s.array_rows = 0;
  EXPECT_THROW(generate_workload(s), InputError);
}
