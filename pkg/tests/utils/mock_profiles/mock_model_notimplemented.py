from projeuler.models.examples import linear_model

model = linear_model(name="unexported")
