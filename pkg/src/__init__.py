# GP-Localize
# Online sparse GP localization and experiment harness
