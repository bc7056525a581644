import configparser
import csv

cfg = configparser.ConfigParser()
cfg.read("alerts.ini")
with open("readings.csv") as f:
    peak = max(int(row["value"]) for row in csv.DictReader(f))
assert cfg.getint("alerts", "max_value") == peak, "max_value does not match the readings"
print("config ok")
