import os
from unittest import mock

from config.util import env_bool, env_choice, env_int, strtobool
from django.test import SimpleTestCase


class TestStrtobool(SimpleTestCase):
    def test_values(self):
        for value, expected in (
            ("yes", True),
            ("On", True),
            ("1", True),
            ("f", False),
            ("OFF", False),
            ("0", False),
        ):
            with self.subTest(value=value):
                self.assertIs(strtobool(value), expected)
        with self.assertRaisesMessage(ValueError, "invalid truth value"):
            strtobool("maybe")


class TestEnvReaders(SimpleTestCase):
    def test_bool(self):
        with mock.patch.dict(os.environ, {"SUBTLE_FLAG": "true"}):
            self.assertTrue(env_bool("SUBTLE_FLAG"))
        with mock.patch.dict(os.environ):
            os.environ.pop("SUBTLE_FLAG", None)
            self.assertFalse(env_bool("SUBTLE_FLAG"))
            self.assertTrue(env_bool("SUBTLE_FLAG", True))

    def test_int(self):
        with mock.patch.dict(os.environ, {"SUBTLE_COUNT": "-1"}):
            self.assertEqual(env_int("SUBTLE_COUNT", 1), -1)
        with mock.patch.dict(os.environ, {"SUBTLE_COUNT": " "}):
            self.assertEqual(env_int("SUBTLE_COUNT", 4), 4)
        with mock.patch.dict(os.environ, {"SUBTLE_COUNT": "many"}):
            with self.assertRaisesMessage(ValueError, "must be an integer"):
                env_int("SUBTLE_COUNT", 1)

    def test_choice(self):
        choices = ("floor", "skip")
        with mock.patch.dict(os.environ, {"SUBTLE_POLICY": "Skip"}):
            self.assertEqual(
                env_choice("SUBTLE_POLICY", "floor", choices), "skip"
            )
        with mock.patch.dict(os.environ):
            os.environ.pop("SUBTLE_POLICY", None)
            self.assertEqual(
                env_choice("SUBTLE_POLICY", "floor", choices), "floor"
            )
        with mock.patch.dict(os.environ, {"SUBTLE_POLICY": "drop"}):
            with self.assertRaisesMessage(ValueError, "one of floor, skip"):
                env_choice("SUBTLE_POLICY", "floor", choices)
