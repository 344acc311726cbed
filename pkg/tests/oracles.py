"""Frozen reference values.

Each value was computed once with mpmath at 40 significant digits (or
sympy for exact antiderivatives), independently of the package, and is
re-derived by ``test_oracles.py``.
"""

from fractions import Fraction

# 10 ** 0.88
POW_10_088 = 7.5857757502918376875
# Tversky-Kahneman weight p^g / (p^g + (1-p)^g)^(1/g) at g = 0.61, p = 0.1
TK_061_01 = 0.18630256637717415051
# 4^0.5 * 0.5^0.8: gain value of 4 * 1_A with P(A) = 1/2, alpha = 0.5, gamma = 0.8
V_PLUS_TWO_POINT = 1.1486983549970350068
# 4^0.6 * 0.5^0.7: loss value of 4 * 1_{A^c} with P(A^c) = 1/2, beta = 0.6, delta = 0.7
V_MINUS_TWO_POINT = 1.4142135623730950488
# 0.5 * (100^0.9 - 100^0.5): two-point witness at n = 100, alpha = 0.9, beta = 0.5, gamma = delta = 1
WITNESS_1_N100 = 26.547867224009662472
# 3 ** 0.8
POW_3_08 = 2.4082246852806920463
# root of 1 + ln a = 3 for P{X > x} = 1/x on [1, inf)
E_SQUARED = 7.3890560989306502272
# log-normal kernel, v = 0.16, ln rho ~ N(-v/2, v) under P
EXP_016 = 1.173510870991810235  # E_P[rho^2] = E_P[rho^-1] = e^v
EXP_M008 = 0.92311634638663578291  # P-median of rho
EXP_008 = 1.0832870676749585544  # Q-median of rho
MOMENT_P4_016 = 2.6116964734231177184  # E_P[rho^4]
MOMENT_PM4_016 = 4.9530324243951148037  # E_P[rho^-4]
MOMENT_P8_016 = 88.234672675651478167  # E_P[rho^8]
# P{U >= 1/2} = Phi(-sqrt(v))
P_UPPER_HALF_016 = 0.34457825838967583326
P_UPPER_HALF_004 = 0.42074029056089697696
# int_0^(1/2) u^(-1/2) du, the Q-mean of the third construction's gain with xi = 2
E_Q_Y_XI2 = 1.4142135623730950488
# D = int_1^inf t^(-8) dt for a = s = 1/2, b = 2
D_EXAMPLE = Fraction(1, 7)
