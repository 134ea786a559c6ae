# Agents package