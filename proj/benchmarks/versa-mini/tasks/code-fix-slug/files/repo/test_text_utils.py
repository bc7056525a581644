import unittest

from text_utils import slugify


class SlugifyTest(unittest.TestCase):
    def test_lowercase(self):
        self.assertEqual(slugify("Hello World"), "hello-world")

    def test_punctuation(self):
        self.assertEqual(slugify("Tea, Coffee & Cocoa!"), "tea-coffee-cocoa")


if __name__ == "__main__":
    unittest.main()
