"""Shared physical constants and unit conversions.

The Carson terms are the standard "modified Carson" coefficients for
60 Hz and 100 Ohm-m earth resistivity, with distances in feet and
impedances in Ohm/mile.  They are fixed decimals by convention, not
recomputed from frequency and resistivity.
"""

import math

SYSTEM_FREQ_HZ = 60.0

# Modified Carson's equation coefficients (Ohm/mile, distances in feet).
CARSON_R = 0.09530            # earth-return resistance term
CARSON_X = 0.12134            # reactance multiplier
CARSON_LOG_OFFSET = 7.93402   # earth-return depth term inside the log

EPSILON_0 = 8.8541878128e-12  # vacuum permittivity, F/m

METERS_PER_MILE = 1609.344
FEET_PER_MILE = 5280.0
INCHES_PER_FOOT = 12.0

SQRT3 = math.sqrt(3.0)

# Regulator hardware convention: 0.625 % of the 120 V base per tap step.
REGULATOR_STEP_PCT = 0.625
REGULATOR_STEP_V120 = 120.0 * REGULATOR_STEP_PCT / 100.0
