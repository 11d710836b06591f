from projeuler.models.examples import linear_model

MODEL = linear_model(lam=1.0, sigma=0.1, name="fixture-linear")
