# Probability clamp applied to arm-mean predictions before the logit link
CLAMP_EPS = 1e-3

# Lower bound for the conditional standard deviation of a batch mean
SIGMA_FLOOR = 1e-8

# Bounds for the estimated propensity score
PROPENSITY_CLIP_LO = 0.01
PROPENSITY_CLIP_HI = 0.99

# CSV column names for the outcome and treatment indicator
OUTCOME_COLUMN = "y"
TREATMENT_COLUMN = "a"
COVARIATE_PREFIX = "x"

# Largest Lambda kept in test state and reports; decisions only compare
# against 1 / alpha
LAMBDA_CAP = 1e300
