#include <gtest/gtest.h>

#include <random>

#include "capstore/error.hpp"
#include "capstore/workload.hpp"
#include "oracles.hpp"
#include "random_workload.hpp"

using namespace capstore;

namespace {

nlohmann::json op_doc(const std::string& name, std::uint64_t fp_total) {
  nlohmann::json c = {{"weight", 0}, {"data", 0}, {"acc", fp_total}};
  return {{"name", name}, {"footprint", c}, {"reads", c}, {"writes", c}, {"cycles", 10}};
}

nlohmann::json five_ops(std::uint64_t iters) {
  nlohmann::json doc;
  doc["routing_iterations"] = iters;
  for (const char* n : {"C1", "PC", "CC-FC", "SumSquash", "UpdateSum"}) doc["ops"].push_back(op_doc(n, 100));
  return doc;
}

std::string error_of(const nlohmann::json& doc) {
  try {
    load_workload(doc);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadWorkload, RoutingOpsRepeatPerIteration) {
  const Workload w = load_workload(five_ops(3));
  ASSERT_EQ(w.ops.size(), 5u);
  EXPECT_EQ(w.ops[3].kind, OpKind::SumSquash);
  EXPECT_EQ(w.ops[3].repeat, 3u);
  EXPECT_EQ(w.ops[4].repeat, 3u);
  EXPECT_EQ(w.ops[0].repeat, 1u);
  EXPECT_TRUE(w.is_canonical());
}

TEST(LoadWorkload, SingleIteration) {
  const Workload w = load_workload(five_ops(1));
  EXPECT_EQ(w.ops[3].repeat, 1u);
  EXPECT_EQ(w.ops[4].repeat, 1u);
}

TEST(LoadWorkload, MissingOpIsNamed) {
  auto doc = five_ops(3);
  doc["ops"].erase(1);
  EXPECT_NE(error_of(doc).find("PC"), std::string::npos);
}

TEST(LoadWorkload, RejectsBadDocuments) {
  auto empty = five_ops(3);
  empty["ops"] = nlohmann::json::array();
  EXPECT_NE(error_of(empty).find("no operations"), std::string::npos);

  auto negative = five_ops(3);
  negative["ops"][2]["reads"]["data"] = -4;
  EXPECT_NE(error_of(negative).find("CC-FC"), std::string::npos);

  auto dup = five_ops(3);
  dup["ops"].push_back(op_doc("C1", 5));
  EXPECT_NE(error_of(dup).find("duplicate"), std::string::npos);

  auto unknown = five_ops(3);
  unknown["ops"][0]["name"] = "Conv9";
  EXPECT_NE(error_of(unknown).find("Conv9"), std::string::npos);

  auto zero_iter = five_ops(0);
  EXPECT_FALSE(error_of(zero_iter).empty());
}

TEST(LoadWorkload, NormalizesOrderAndRoundTrips) {
  auto doc = five_ops(2);
  std::swap(doc["ops"][0], doc["ops"][4]);
  const Workload w = load_workload(doc);
  EXPECT_TRUE(w.is_canonical());
  EXPECT_EQ(w.ops.front().kind, OpKind::C1);
  EXPECT_EQ(load_workload(nlohmann::json::parse(to_json(w).dump())), w);
}

TEST(LoadWorkload, ReferenceFile) {
  const Workload w = load_workload_file(std::string(CAPSTORE_DATA_DIR) + "/reference_workload.json");
  EXPECT_EQ(w.routing_iterations, 3u);
  EXPECT_EQ(w.total_cycles(), 33000u + 750000u + 6000u + 3u * 1000u + 3u * 1200u);
  EXPECT_THROW(load_workload_file("/nonexistent/w.json"), InputError);
}

TEST(OffChip, LayerFillsAndWritebacks) {
  Workload w;
  WorkloadOp c1;
  c1.kind = OpKind::C1;
  c1.writes.weight = 100;
  c1.writes.data = 200;
  WorkloadOp pc;
  pc.kind = OpKind::PC;
  pc.reads.data = 500;
  WorkloadOp ss;
  ss.kind = OpKind::SumSquash;
  ss.reads = {7, 7, 7};
  ss.writes = {7, 7, 7};
  w.ops = {c1, pc, ss};
  const auto p = offchip_accesses(w);
  EXPECT_EQ(p.reads[0], 300u);
  EXPECT_EQ(p.writes[0], 500u);
  EXPECT_EQ(p.reads[2], 0u);
  EXPECT_EQ(p.writes[2], 0u);
}

TEST(OffChip, ReferenceTotals) {
  const Workload w = load_workload_file(std::string(CAPSTORE_DATA_DIR) + "/reference_workload.json");
  const auto p = offchip_accesses(w);
  EXPECT_EQ(p.total_reads() + p.total_writes(), 9579536u);
  EXPECT_EQ(p.reads[3] + p.writes[3] + p.reads[4] + p.writes[4], 0u);
}

TEST(OffChip, RejectsUnorderedOps) {
  Workload w;
  w.ops.resize(2);
  w.ops[0].kind = OpKind::PC;
  w.ops[1].kind = OpKind::C1;
  EXPECT_THROW(offchip_accesses(w), InputError);
}

TEST(OffChip, MatchesWalkerOnRandomSubsets) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Workload w = testkit::random_workload(rng, {.all_ops = false});
    const auto p = offchip_accesses(w);
    const auto [r, wr] = testkit::offchip_walk(w);
    ASSERT_EQ(p.reads, r);
    ASSERT_EQ(p.writes, wr);
  }
}

TEST(FootprintStats, MaxTotalAndTies) {
  Workload w;
  for (auto [k, total] : {std::pair{OpKind::C1, 300000u}, {OpKind::PC, 471040u}, {OpKind::CCFC, 200000u}}) {
    WorkloadOp op;
    op.kind = k;
    op.footprint.acc = total;
    w.ops.push_back(op);
  }
  auto s = footprint_stats(w);
  EXPECT_EQ(s.max_total.bytes, 471040u);
  EXPECT_EQ(s.max_total.op_index, 1u);

  for (auto& op : w.ops) op.footprint = {5, 5, 5};
  s = footprint_stats(w);
  EXPECT_EQ(s.max_total.op_index, 0u);
  EXPECT_EQ(s.min_of(MemComponent::Data).op_index, 0u);
  EXPECT_THROW(footprint_stats(Workload{}), InputError);
}

TEST(FootprintStats, ReferenceExtremes) {
  const Workload w = load_workload_file(std::string(CAPSTORE_DATA_DIR) + "/reference_workload.json");
  const auto s = footprint_stats(w);
  EXPECT_EQ(s.max_total.bytes, 471040u);
  EXPECT_EQ(w.ops[s.max_total.op_index].kind, OpKind::PC);
  EXPECT_EQ(s.max_of(MemComponent::Weight).bytes, 110592u);
  EXPECT_EQ(s.max_of(MemComponent::Data).bytes, 25600u);
  EXPECT_EQ(s.max_of(MemComponent::Accumulator).bytes, 460800u);
  EXPECT_EQ(s.sum_of_minima(), 1024u + 1024u + 204800u);
}
