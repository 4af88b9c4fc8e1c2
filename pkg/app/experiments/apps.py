from django.apps import AppConfig


class ExperimentsConfig(AppConfig):
    name = "app.experiments"
    verbose_name = "Sequential subgroup experiments"
