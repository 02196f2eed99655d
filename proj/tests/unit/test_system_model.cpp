#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_util.hpp"

using namespace lf_test;

TEST(Diagonalize, ThreeLevelStaysPut) {
  const EigenData e = diagonalize_system(three_level(0.75, 1.35));
  EXPECT_NEAR(e.energies(0), 0.0, 1e-15);
  EXPECT_NEAR(e.energies(1), 0.75, 1e-15);
  EXPECT_NEAR(e.energies(2), 1.35, 1e-15);
  EXPECT_LT((e.basis - ComplexMatrix::Identity(3, 3)).norm(), 1e-14);
}

TEST(Diagonalize, ShuffledDiagonalGivesPermutation) {
  SystemSpec s;
  s.hamiltonian = ComplexMatrix::Zero(3, 3);
  s.hamiltonian(0, 0) = 2.0;
  s.hamiltonian(1, 1) = 0.5;
  s.hamiltonian(2, 2) = 1.0;
  s.coupling_ops.push_back(ComplexMatrix::Identity(3, 3));
  const EigenData e = diagonalize_system(s);
  EXPECT_DOUBLE_EQ(e.energies(0), 0.5);
  EXPECT_DOUBLE_EQ(e.energies(1), 1.0);
  EXPECT_DOUBLE_EQ(e.energies(2), 2.0);
  RealMatrix perm = RealMatrix::Zero(3, 3);
  perm(1, 0) = perm(2, 1) = perm(0, 2) = 1.0;
  EXPECT_LT((e.basis.cwiseAbs() - perm).norm(), 1e-14);
}

TEST(Diagonalize, PauliX) {
  SystemSpec s;
  s.hamiltonian = ComplexMatrix::Zero(2, 2);
  s.hamiltonian(0, 1) = s.hamiltonian(1, 0) = 1.0;
  s.coupling_ops.push_back(s.hamiltonian);
  const EigenData e = diagonalize_system(s);
  EXPECT_NEAR(e.energies(0), -1.0, 1e-15);
  EXPECT_NEAR(e.energies(1), 1.0, 1e-15);
  const ComplexMatrix rebuilt = e.basis * e.energies.cast<Complex>().asDiagonal() * e.basis.adjoint();
  EXPECT_LT((rebuilt - s.hamiltonian).norm(), 1e-10);
}

TEST(Diagonalize, RejectsNonHermitian) {
  SystemSpec s;
  s.hamiltonian = ComplexMatrix::Zero(2, 2);
  s.hamiltonian(0, 1) = 1.0;
  s.coupling_ops.push_back(ComplexMatrix::Identity(2, 2));
  try {
    (void)diagonalize_system(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonHermitianInput);
  }
}

TEST(Transitions, ThreeLevelHasFourTransitions) {
  const TransitionTable t = make_transition_table(three_level(0.75, 1.35));
  ASSERT_EQ(t.size(), 4);
  std::multiset<double> w;
  for (const auto& tr : t.transitions) w.insert(std::round(tr.frequency * 1e12) / 1e12);
  EXPECT_EQ(w, (std::multiset<double>{-1.35, -0.75, 0.75, 1.35}));
  for (const auto& tr : t.transitions) {
    if (tr.frequency > 0) {
      EXPECT_EQ(tr.bra_level, 0);  // lowering: |0⟩⟨m|
    }
  }
}

TEST(Transitions, ZeroCouplingGivesEmptyTable) {
  SystemSpec s = three_level(0.75, 1.35);
  s.coupling_ops[0].setZero();
  EXPECT_EQ(make_transition_table(s).size(), 0);
}

TEST(Transitions, RandomFourLevelReconstruction) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    SystemSpec s;
    s.hamiltonian = random_hermitian(gen, 4);
    ComplexMatrix a = random_hermitian(gen, 4);
    a.diagonal().setZero();
    s.coupling_ops.push_back(a);
    const TransitionTable t = make_transition_table(s, 1e-9, 0.0);
    // zero diagonal in the native basis is not zero in the eigenbasis, so count only
    // the off-diagonal pairs
    int off = 0;
    for (const auto& tr : t.transitions) off += tr.bra_level != tr.ket_level;
    EXPECT_EQ(off, 12);
    EXPECT_LT((t.reconstruct(0) - t.to_eigen(a)).norm(), 1e-10);
    EXPECT_LT((t.to_native(t.reconstruct(0)) - a).norm(), 1e-10);
  }
}

TEST(Transitions, ConjugateClosureAndFrequencyConsistency) {
  std::mt19937_64 gen(5);
  const SystemSpec s = random_system(gen, 4, 2);
  const TransitionTable t = make_transition_table(s);
  for (const auto& tr : t.transitions) {
    EXPECT_EQ(tr.frequency, t.eigen_energies(tr.ket_level) - t.eigen_energies(tr.bra_level));
    auto it = std::find_if(t.transitions.begin(), t.transitions.end(), [&](const Transition& o) {
      return o.bra_level == tr.ket_level && o.ket_level == tr.bra_level;
    });
    ASSERT_NE(it, t.transitions.end());
    EXPECT_EQ(it->frequency, -tr.frequency);
    EXPECT_LT((it->elements - tr.elements.conjugate()).norm(), 1e-12);
  }
}

TEST(Transitions, TableHoldsIndexOrder) {
  const TransitionTable t = make_transition_table(three_level(0.75, 1.35));
  for (int j = 0; j < t.size(); ++j) EXPECT_EQ(t.transitions[static_cast<std::size_t>(j)].index, j);
}

namespace {
TransitionTable table_with(const std::vector<double>& freqs) {
  TransitionTable t;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    Transition tr;
    tr.index = static_cast<int>(k);
    tr.frequency = freqs[k];
    t.transitions.push_back(tr);
  }
  return t;
}
}  // namespace

TEST(Clusters, TwoCloseFrequenciesMerge) {
  const auto c = cluster_transitions(table_with({0.95, 1.05}), 0.2);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0].mean_frequency, 1.0, 1e-15);
}

TEST(Clusters, ZeroWidthGivesSingletons) {
  const auto c = cluster_transitions(table_with({0.7, 0.8, 1.4}), 0.0);
  EXPECT_EQ(c.size(), 3u);
}

TEST(Clusters, SingleLinkageByHand) {
  const auto c = cluster_transitions(table_with({1.4, 0.7, 0.8}), 0.15);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].members, (std::vector<int>{1, 2}));
  EXPECT_NEAR(c[0].mean_frequency, 0.75, 1e-15);
  EXPECT_EQ(c[1].members, (std::vector<int>{0}));
  EXPECT_NEAR(c[1].mean_frequency, 1.4, 1e-15);
}

TEST(Clusters, NegativeWidthRejected) {
  EXPECT_THROW((void)cluster_transitions(table_with({1.0}), -0.1), Error);
}
