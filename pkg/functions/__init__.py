# Functions package
