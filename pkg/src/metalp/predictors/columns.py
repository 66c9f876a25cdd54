"""Fixed feature column order. Bump ``SCHEMA_VERSION`` on any change."""

SCHEMA_VERSION = 1

GLOBAL_COLUMNS = ("N", "OE", "AD", "VD", "ND", "DA", "NT", "ACC")
PAIR_COLUMNS = (
    "CN", "SP", "LHN", "PPR", "PA", "JC", "AA", "RA",
    "LRA", "dLRA", "mLRA", "LRA_approx", "dLRA_approx", "mLRA_approx",
)
NODE_COLUMNS = ("LCC", "AND", "SPBC", "CC", "DC", "EC", "KC", "LNT", "PR", "LC")

FEATURE_COLUMNS = (
    GLOBAL_COLUMNS
    + PAIR_COLUMNS
    + tuple(f"{c}_i" for c in NODE_COLUMNS)
    + tuple(f"{c}_j" for c in NODE_COLUMNS)
)

assert len(FEATURE_COLUMNS) == 42
